"""Bonnet-Myers reporting and conjugate-time detection on the flat model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .algebra import standard_structure
from .flow import (DEFAULT_DT, ExtremalState, extremal_rhs, heisenberg_rhs, keep_norm,
                   trajectory_arrays)
from .frame import complete_rows, frame_rhs, rcc_direct, trace_rcc
from .model import QcModelData, kappa, make_model
from .ode import rk4_step

log = logging.getLogger(__name__)

FD_STEP = 1e-5
DIP_RATIO = 1e-4
MARGIN_TOL = 1e-10
METHODS = ("jacobi_determinant", "exp_rank")
NO_CONJUGATE_NOTE = "flat geodesics with v = 0 are globally minimizing straight lines"


@dataclass(frozen=True)
class BonnetMyersReport:
    n: int
    kappa: float
    condition_holds: bool
    diameter_bound: float | None
    witness_direction: np.ndarray
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kappa": self.kappa,
            "condition_holds": self.condition_holds,
            "diameter_bound": self.diameter_bound,
            "witness_direction": self.witness_direction.tolist(),
            "message": self.message,
        }


def bonnet_myers_report(M: QcModelData) -> BonnetMyersReport:
    k, x = kappa(M, return_witness=True)
    holds = k > 0
    return BonnetMyersReport(
        n=M.n,
        kappa=k,
        condition_holds=holds,
        diameter_bound=float(np.pi / np.sqrt(k)) if holds else None,
        witness_direction=x,
        message="" if holds else "Bonnet-Myers condition fails",
    )


def _as_uv(samples):
    if isinstance(samples, tuple):
        u, v = samples
        return np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    _, u, v = trajectory_arrays(list(samples))
    return u, v


def trace_criterion_check(M: QcModelData, samples):
    """(holds, margin): margin = min over samples of trace(R_cc) - 4(n-1) kappa.

    ``samples`` is a sequence of ExtremalState or a pair of arrays (u, v).
    """
    u, v = _as_uv(samples)
    margin = float(np.min(trace_rcc(M, u, v) - 4 * (M.n - 1) * kappa(M)))
    return margin >= -MARGIN_TOL, margin


def model_oscillator_time(kappa_value: float, dt: float = DEFAULT_DT) -> float:
    """First positive zero of x'' + kappa x = 0, x(0) = 0, x'(0) = 1."""
    if not kappa_value > 0:
        raise ValueError("kappa must be positive")

    def f(y):
        return np.array([y[1], -kappa_value * y[0]])

    y = np.array([0.0, 1.0])
    t = 0.0
    # a zero exists before 2 pi / sqrt(kappa)
    limit = 2.0 * np.pi / np.sqrt(kappa_value)
    while t < limit:
        y_next = rk4_step(f, y, dt)
        if y_next[0] <= 0.0:
            y0 = y
            return t + brentq(lambda s: rk4_step(f, y0, s)[0], 0.0, dt, xtol=1e-15, rtol=1e-15)
        y, t = y_next, t + dt
    raise RuntimeError("no zero found")


# --- conjugate times on the quaternionic Heisenberg group -------------------

@dataclass(frozen=True)
class ConjugateReport:
    first_conjugate_time: float | None
    method: str
    horizon: float
    resolution: float
    note: str = ""
    scan: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def found(self) -> bool:
        return self.first_conjugate_time is not None

    def to_dict(self) -> dict:
        return {
            "first_conjugate_time": self.first_conjugate_time,
            "found": self.found,
            "method": self.method,
            "horizon": self.horizon,
            "resolution": self.resolution,
            "note": self.note,
        }


class _Scanner:
    """Grid scan of a non-negative indicator sigma(t) along an RK4 flow.

    ``states`` keeps the grid states; ``measure(y)`` returns sigma. The
    state at off-grid times is a single RK4 step from the preceding grid state.
    """

    def __init__(self, f, y0, measure, dt):
        self.f, self.measure, self.dt = f, measure, dt
        self.states = [y0]

    def state_at(self, t):
        k = min(int(np.floor(t / self.dt)), len(self.states) - 1)
        s = t - k * self.dt
        y = self.states[k]
        return y if s <= 0.0 else rk4_step(self.f, y, s)

    def sigma(self, t):
        return self.measure(self.state_at(t))

    def first_dip(self, horizon, resolution):
        """Time of the first local minimum of sigma whose refined value is
        below DIP_RATIO x running max."""
        steps = int(np.ceil(horizon / self.dt))
        vals = [self.measure(self.states[0])]
        running = vals[0]
        y = self.states[0]
        for k in range(1, steps + 1):
            y = rk4_step(self.f, y, self.dt)
            self.states.append(y)
            vals.append(self.measure(y))
            running = max(running, vals[-1])
            if k >= 2 and vals[-2] <= vals[-3] and vals[-2] < vals[-1]:
                # the grid minimum of a V-shaped zero sits up to slope*dt/2 above it,
                # so the threshold is applied after refinement
                t = self._refine((k - 2) * self.dt, k * self.dt, resolution)
                if self.sigma(t) < DIP_RATIO * running:
                    return t, np.array(vals)
        return None, np.array(vals)

    def _refine(self, a, b, resolution):
        # ternary search; sigma is V-shaped around an isolated zero
        while b - a > resolution:
            m1 = a + (b - a) / 3.0
            m2 = b - (b - a) / 3.0
            if self.sigma(m1) <= self.sigma(m2):
                b = m2
            else:
                a = m1
        return 0.5 * (a + b)


def _exp_rank_scanner(n, u0, v0, dt, h=FD_STEP):
    d = 4 * n
    p0 = np.concatenate([u0, v0])
    E = np.eye(d + 3)
    P = np.concatenate([p0 + h * E, p0 - h * E])
    m = 2 * (d + 3)
    y0 = (np.zeros((m, d)), np.zeros((m, 3)), P[:, :d].copy(), P[:, d:].copy())

    def measure(y):
        z, w = y[0], y[1]
        pts = np.concatenate([z, w], axis=1)
        J = (pts[: d + 3] - pts[d + 3:]) / (2.0 * h)
        return float(np.linalg.svd(J, compute_uv=False)[-1])

    return _Scanner(heisenberg_rhs(n), y0, measure, dt)


def _jacobi_scanner(M, u0, v0, dt):
    """Integrate the c-block Jacobi system x'' = -R_cc x with X(0) = 0, X'(0) = 1."""
    f_frame = frame_rhs(M)
    A0 = np.einsum("aij,j->ai", M.Q.I, u0)
    Y0 = complete_rows(A0)
    k = Y0.shape[0]
    O0 = np.eye(3)
    B = np.zeros((M.dim, M.dim))

    def f(y):
        u, v, O, Y, X, Xd = y
        du, dv, dO, dY = f_frame((u, v, O, Y))
        R = rcc_direct(M, u, v, Y, B)
        return du, dv, dO, dY, Xd, -R @ X

    y0 = (u0, v0, O0, Y0, np.zeros((k, k)), np.eye(k))

    def measure(y):
        return float(np.linalg.svd(y[4], compute_uv=False)[-1])

    return _Scanner(f, y0, measure, dt)


def flat_conjugate_time(n: int, u0, v0, horizon: float | None = None,
                        resolution: float = 1e-6, method: str = "jacobi_determinant",
                        dt: float = DEFAULT_DT) -> ConjugateReport:
    """First conjugate time along the flat-model geodesic with initial covector (u0, v0).

    ``exp_rank`` scans the smallest singular value of a central-difference
    Jacobian of the exponential map in all 4n+3 covector directions;
    ``jacobi_determinant`` scans the smallest singular value of the c-block
    Jacobi matrix X_c(t). A zero is a local minimum of the scanned value that
    falls below a small fraction of its running maximum, refined by ternary
    search down to ``resolution``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if u0.shape != (4 * n,) or v0.shape != (3,):
        raise ValueError(f"expected u0 in R^{4 * n} and v0 in R^3")
    if abs(np.linalg.norm(u0) - 1.0) > 1e-10:
        raise ValueError("u0 must be a unit vector")
    speed = float(np.linalg.norm(v0))
    if speed == 0.0:
        return ConjugateReport(None, method, float("inf") if horizon is None else float(horizon),
                               resolution, note=NO_CONJUGATE_NOTE)
    if horizon is None:
        horizon = 3.0 * np.pi / speed
    if method == "exp_rank":
        sc = _exp_rank_scanner(n, u0, v0, dt)
    else:
        sc = _jacobi_scanner(make_model("flat", standard_structure(n)), u0, v0, dt)
    t, vals = sc.first_dip(horizon, resolution)
    log.debug("%s scan: %d samples, first dip at %s", method, len(vals), t)
    note = "" if t is not None else "no conjugate point within horizon"
    return ConjugateReport(None if t is None else float(t), method, float(horizon), resolution,
                           note=note, scan={"dt": dt, "sigma_min": vals})


def random_unit_extremals(M: QcModelData, count: int, rng: np.random.Generator,
                          v_scale: float = 1.0):
    """Random length-parametrized initial states, stacked: (u0 (N, 4n), v0 (N, 3))."""
    u = rng.standard_normal((count, M.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = v_scale * rng.standard_normal((count, 3))
    return u, v


def sample_extremals(M: QcModelData, u0, v0, T: float, dt: float = DEFAULT_DT):
    """Integrate a stack of extremals; returns arrays u (steps+1, N, 4n), v (steps+1, N, 3)."""
    f = extremal_rhs(M)
    y = (np.asarray(u0, dtype=float), np.asarray(v0, dtype=float))
    us, vs = [y[0]], [y[1]]
    for _ in range(int(round(T / dt))):
        u, v = rk4_step(f, y, dt)
        y = (keep_norm(u, y[0]), v)
        us.append(y[0])
        vs.append(y[1])
    return np.stack(us), np.stack(vs)


__all__ = [
    "BonnetMyersReport", "ConjugateReport", "ExtremalState", "bonnet_myers_report",
    "flat_conjugate_time", "model_oscillator_time", "random_unit_extremals",
    "sample_extremals", "trace_criterion_check",
]
