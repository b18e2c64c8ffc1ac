"""Invariant suites: algebra, model closed forms, and the identities along extremals.

Every check reports a named maximum residual against a pinned tolerance.
Finite-difference checks run at two step sizes and additionally require the
error to shrink like h^2 (or sit at the round-off floor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import casimir, decompose, fatness_gram, validate_structure
from .comparison import random_unit_extremals
from .flow import DEFAULT_DT, ExtremalState
from .frame import (PhaseTangent, canonical_vectors, dot_Fc, dv_derivatives,
                    evolve_frame_track, frame_matrices, frame_motion, frame_rhs, rcc, rcc_symplectic,
                    structural_slice, sympl, trace_rcc)
from .model import (MODEL_TOL, QcModelData, bonnet_myers_form, kappa, lemma_t0u_check,
                    model_residuals)
from .ode import rk4_step

CLOSED_TOL = 1e-10
PRO2_TOL = 1e-8
FRAME_TOL = 1e-8
DARBOUX_TOL = 1e-8
SYMMETRY_TOL = 1e-10
TRACE_REL_TOL = 1e-8
FD_STEPS = (1e-4, 1e-5)
# O(h^2): a tenfold smaller step must cut the error at least 25-fold, unless
# both errors already sit at the round-off floor
FD_RATIO = 25.0
FD_COARSE_TOL = 1e-5
FD_FLOOR = 1e-8


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.suite}/{self.name}  max_residual={self.residual:.3e}  tol={self.tol:.0e}{extra}"


def _check(suite, name, residual, tol, detail=""):
    residual = float(residual)
    return Check(suite, name, residual, tol, bool(residual <= tol), detail)


def _maxabs(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def _t(x):
    return np.swapaxes(x, -1, -2)


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


# --- algebra and model ------------------------------------------------------

def algebra_suite(Q, rng: np.random.Generator, samples: int = 20):
    out = []
    rep = validate_structure(Q)
    for name, r in rep["residuals"].items():
        out.append(_check("algebra", name, r, 1e-12))
    d = Q.dim
    idem = eig = recon = gram = 0.0
    for _ in range(samples):
        a = rng.standard_normal((d, d))
        psi = a + a.T
        p3, m1 = decompose(Q, psi)
        q3, _ = decompose(Q, p3)
        _, q1 = decompose(Q, m1)
        idem = max(idem, _maxabs(q3 - p3), _maxabs(q1 - m1))
        eig = max(eig, _maxabs(casimir(Q, p3) - 3 * p3), _maxabs(casimir(Q, m1) + m1))
        recon = max(recon, _maxabs(p3 + m1 - psi))
        x = rng.standard_normal(d)
        gram = max(gram, _maxabs(fatness_gram(Q, x) + 2 * (x @ x) * np.eye(3)))
    out.append(_check("algebra", "casimir-idempotent", idem, 1e-12))
    out.append(_check("algebra", "casimir-eigen", eig, 1e-12))
    out.append(_check("algebra", "casimir-reconstruct", recon, 1e-12))
    out.append(_check("algebra", "fatness-gram", gram, 1e-12))
    return out


def model_suite(M: QcModelData, rng: np.random.Generator, samples: int = 1000):
    out = []
    for name, r in model_residuals(M.Q, M.T0, M.U).items():
        out.append(_check("model", name, r, MODEL_TOL))
    X = rng.standard_normal((samples, M.dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    _, _, res = lemma_t0u_check(M, X)
    out.append(_check("model", "lemma-t0u", np.max(res), 1e-12))
    # kappa is the minimum of the form: no sample may fall below it
    k = kappa(M)
    below = np.max(4 * (M.n - 1) * k - bonnet_myers_form(M, X))
    out.append(_check("model", "kappa-minimum", max(below, 0.0), 1e-12))
    return out


# --- identities along extremals ---------------------------------------------

def _fd_check(suite, name, err_coarse, err_fine, scale):
    """O(h^2) criterion on relative central-difference errors at two steps."""
    rc, rf = err_coarse / scale, err_fine / scale
    order_ok = rf <= max(rc / FD_RATIO, FD_FLOOR)
    order = np.log10(rc / rf) if rc > 0 and rf > 0 else float("nan")
    detail = f"err(h=1e-5)={rf:.2e} observed_order={order:.2f}"
    return Check(suite, name, rc, FD_COARSE_TOL, bool(rc <= FD_COARSE_TOL and order_ok), detail)


def _step(f, y, h):
    return rk4_step(f, y, h)


def _closed_form_residuals(sl, res):
    A, C, V, v, u = sl.A, sl.C, sl.V, sl.v, sl.u
    eye3 = np.eye(3)
    vv = np.einsum("...a,...a->...", v, v)[..., None, None]
    pairs = {
        "idav:AA*=1": A @ _t(A) - eye3,
        "idav:A(gamma')=0": np.einsum("...ai,...i->...a", A, u),
        "idav:Vv=0": np.einsum("...ab,...b->...a", V, v),
        "idav:AC=VA-v(gamma')*": A @ C - (V @ A - _outer(v, u)),
        "idav:V^2=vv*-|v|^2": V @ V - (_outer(v, v) - vv * eye3),
        "secder:2C(gamma')=-2A*v": sl.u_dot + 2.0 * np.einsum("...ai,...a->...i", A, v),
        "dotv:v'=-G*(gamma')": sl.v_dot + np.einsum("...ia,...i->...a", sl.G, u),
        "morid:A'A*=2V": sl.A_dot @ _t(A) - 2.0 * V,
        "morid:AA'*=-2V": A @ _t(sl.A_dot) + 2.0 * V,
        "morid:ACA*=V": A @ C @ _t(A) - V,
        "morid:A'+AC=3VA+v(gamma')*": sl.A_dot + A @ C - (3.0 * V @ A + _outer(v, u)),
        "morid:V^3=-|v|^2V": V @ V @ V + vv * V,
        "iddota:AA''*=-2V'-4|v|^2": A @ _t(sl.A_ddot) + 2.0 * sl.V_dot + 4.0 * vv * eye3,
    }
    for k, r in pairs.items():
        res[k] = max(res.get(k, 0.0), _maxabs(r))


def _pro2_residuals(sl, res):
    d0, d1, d2, d3 = dv_derivatives(sl, allow_partial=True)
    V = sl.V
    eye3 = np.eye(3)
    pairs = {
        "s(dv,dv)=0": sympl(sl, d0, d0),
        "s(dv,dv')=0": sympl(sl, d0, d1),
        "s(dv,dv'')=0": sympl(sl, d0, d2),
        "s(dv,dv''')=4": sympl(sl, d0, d3) - 4.0 * eye3,
        "s(dv',dv')=0": sympl(sl, d1, d1),
        "s(dv',dv'')=-4": sympl(sl, d1, d2) + 4.0 * eye3,
        "s(dv',dv''')=24V": sympl(sl, d1, d3) - 24.0 * V,
        "s(dv'',dv'')=-24V": sympl(sl, d2, d2) + 24.0 * V,
    }
    # the simplified closed form of the third derivative
    simp = PhaseTangent(d3.pu, d3.pv, -4.0 * (3.0 * V @ sl.A + _outer(sl.v, sl.u)),
                        np.broadcast_to(4.0 * eye3, d3.qv.shape))
    pairs["dv'''-simplified"] = (d3 - simp).coeffs
    for k, r in pairs.items():
        res[k] = max(res.get(k, 0.0), _maxabs(r))


def _frame_residuals(sl, O, Y, res):
    eye3 = np.eye(3)
    k = Y.shape[-2]
    pairs = {
        "YY*=1": Y @ _t(Y) - np.eye(k),
        "YA*=0": Y @ _t(sl.A),
        "Y*Y=1-A*A": _t(Y) @ Y - (np.eye(sl.dim) - _t(sl.A) @ sl.A),
        "OO*=1": O @ _t(O) - eye3,
    }
    for name, r in pairs.items():
        res[name] = max(res.get(name, 0.0), _maxabs(r))


def _darboux_residuals(sl, cv, res):
    k = cv.Ec.pu.shape[-2]
    pairs = {
        "s(Ec,Fc)=1": sympl(sl, cv.Ec, cv.Fc) - np.eye(k),
        "s(Ec,Fb)=0": sympl(sl, cv.Ec, cv.Fb),
        "s(Eb,Fb)=1": sympl(sl, cv.Eb, cv.Fb) - np.eye(3),
        "s(Eb,Fc)=0": sympl(sl, cv.Eb, cv.Fc),
        "s(Ea,Fb)=0": sympl(sl, cv.Ea, cv.Fb),
        "s(Ea,Fc)=0": sympl(sl, cv.Ea, cv.Fc),
        "s(Fb,Fb)=0": sympl(sl, cv.Fb, cv.Fb),
        "s(Fc,Fc)=0": sympl(sl, cv.Fc, cv.Fc),
        "s(Fb,Fc)=0": sympl(sl, cv.Fb, cv.Fc),
        "s(Ea,Eb)=0": sympl(sl, cv.Ea, cv.Eb),
        "s(Eb,Ec)=0": sympl(sl, cv.Eb, cv.Ec),
        "s(Ec,Ec)=0": sympl(sl, cv.Ec, cv.Ec),
    }
    for name, r in pairs.items():
        res[name] = max(res.get(name, 0.0), _maxabs(r))


def _fd_quantities(sl, O, Y):
    """Quantities differentiated numerically, paired with their closed-form derivatives."""
    W, W_dot, _, O_dot, Y_dot = frame_matrices(sl, O, Y)
    cv = canonical_vectors(sl, O, Y)
    vals = {
        "dota:A'": (sl.A, sl.A_dot),
        "iddota:A''": (sl.A_dot, sl.A_ddot),
        "secder:gamma''": (sl.u, sl.u_dot),
        "dotv:v'": (sl.v, sl.v_dot),
        "C'": (sl.C, sl.C_dot),
        "doto:O'": (O, O_dot),
        "eqforU:Y'": (Y, Y_dot),
        "dotw:W'": (W, W_dot),
        "Ea'=Eb": (cv.Ea, cv.Eb.coeffs),
        "Eb'=-Fb": (cv.Eb, -cv.Fb.coeffs),
        "Ec'=-Fc": (cv.Ec, -cv.Fc.coeffs),
    }
    return vals, cv


def identity_suite(M: QcModelData, rng: np.random.Generator, count: int = 50,
                   T: float = np.pi, dt: float = DEFAULT_DT, B_eval=None, chunk: int = 400,
                   fd_stride: int = 1):
    """Integrate ``count`` random unit-speed extremals with their frames and check
    every identity at every sample (finite differences on every ``fd_stride``-th)."""
    u0, v0 = random_unit_extremals(M, count, rng)
    track = evolve_frame_track(M, ExtremalState(0.0, u0, v0), T, dt)
    f = frame_rhs(M)
    closed, pro2, frame, darboux, extra = {}, {}, {}, {}, {}
    fd_err = {h: {} for h in FD_STEPS}
    fd_scale = {}
    full = M.kind == "flat" or B_eval is not None

    nt = len(track.t)
    for lo in range(0, nt, chunk):
        hi = min(nt, lo + chunk)
        u, v, O, Y = track.u[lo:hi], track.v[lo:hi], track.O[lo:hi], track.Y[lo:hi]
        sl = structural_slice(M, u, v, B_eval)
        _closed_form_residuals(sl, closed)
        _pro2_residuals(sl, pro2)
        _frame_residuals(sl, O, Y, frame)
        cv = canonical_vectors(sl, O, Y)
        _darboux_residuals(sl, cv, darboux)
        if full:
            r1 = rcc(sl, Y)
            r2 = rcc_symplectic(sl, O, Y)
            extra["rcc-symmetric"] = max(extra.get("rcc-symmetric", 0.0), _maxabs(r1 - _t(r1)))
            extra["rcc-two-path"] = max(extra.get("rcc-two-path", 0.0), _maxabs(r1 - r2))
            tr = np.trace(r1, axis1=-2, axis2=-1)
            ref = trace_rcc(M, u, v)
            rel = np.abs(tr - ref) / np.maximum(np.abs(ref), 1e-300)
            extra["trace-two-path-rel"] = max(extra.get("trace-two-path-rel", 0.0), _maxabs(rel))
            # c-row: Fc' - Rcc Ec - Rcb Eb is a multiple of Ea, i.e. only a d/dv part
            dFc = dot_Fc(sl, O, Y)
            Rcb = sympl(sl, dFc, cv.Fb)
            rest = dFc - r1 @ cv.Ec - Rcb @ cv.Eb
            extra["Fc'-row"] = max(extra.get("Fc'-row", 0.0),
                                   _maxabs(rest.pu), _maxabs(rest.qu), _maxabs(rest.qv))

        idx = slice(None, None, fd_stride)
        y = (u[idx], v[idx], O[idx], Y[idx])
        sl0 = structural_slice(M, y[0], y[1], B_eval)
        base, _ = _fd_quantities(sl0, y[2], y[3])
        for h in FD_STEPS:
            yp, ym = _step(f, y, h), _step(f, y, -h)
            slp = structural_slice(M, yp[0], yp[1], B_eval)
            slm = structural_slice(M, ym[0], ym[1], B_eval)
            qp, _ = _fd_quantities(slp, yp[2], yp[3])
            qm, _ = _fd_quantities(slm, ym[2], ym[3])
            for name, (val0, deriv) in base.items():
                if isinstance(val0, PhaseTangent):
                    # structural equations: coefficient derivative plus frame motion
                    fd = ((qp[name][0].coeffs - qm[name][0].coeffs) / (2.0 * h)
                          + frame_motion(sl0, val0).coeffs)
                else:
                    fd = (qp[name][0] - qm[name][0]) / (2.0 * h)
                fd_err[h][name] = max(fd_err[h].get(name, 0.0), _maxabs(fd - deriv))
                fd_scale[name] = max(fd_scale.get(name, 1.0), _maxabs(deriv))

    out = []
    for name, r in closed.items():
        out.append(_check("identities", name, r, CLOSED_TOL))
    for name, r in pro2.items():
        out.append(_check("pro2", name, r, PRO2_TOL))
    for name, r in frame.items():
        out.append(_check("frame", name, r, FRAME_TOL))
    for name, r in darboux.items():
        out.append(_check("darboux", name, r, DARBOUX_TOL))
    for name in fd_err[FD_STEPS[0]]:
        out.append(_fd_check("finite-difference", name, fd_err[FD_STEPS[0]][name],
                             fd_err[FD_STEPS[1]][name], fd_scale[name]))
    if full:
        out.append(_check("curvature", "rcc-symmetric", extra["rcc-symmetric"], SYMMETRY_TOL))
        out.append(_check("curvature", "rcc-two-path", extra["rcc-two-path"], 1e-10))
        out.append(_check("curvature", "trace-two-path-rel", extra["trace-two-path-rel"],
                          TRACE_REL_TOL))
        out.append(_check("curvature", "Fc'-row", extra["Fc'-row"], 1e-8))
    return out


def run_all(M: QcModelData, seed: int = 0, count: int = 5, T: float = np.pi,
            dt: float = DEFAULT_DT, B_eval=None):
    rng = np.random.default_rng(seed)
    checks = algebra_suite(M.Q, rng)
    checks += model_suite(M, rng)
    checks += identity_suite(M, rng, count=count, T=T, dt=dt, B_eval=B_eval)
    return checks
