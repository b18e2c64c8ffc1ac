"""Structural matrices, symplectic products and the canonical Jacobi frame.

Tangent vectors to T*M along an extremal are stored by their coefficients in
the Hamiltonian frame (d/du, d/dv, ->u, ->v). Every structural quantity
accepts leading batch axes, so a whole sampled extremal can be processed in
one call.

Frame ordering of ``PhaseTangent.coeffs``: [pu (4n), pv (3), qu (4n), qv (3)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import so3_hat
from .flow import DEFAULT_DT, ExtremalState, extremal_rhs, keep_norm
from .model import QcModelData, rho_matrices, ric, sum_sectional, torsion_matrices
from .ode import rk4_step

GS_SKIP = 1e-6


class CurvatureUnavailable(RuntimeError):
    """The full horizontal curvature matrix B is needed but was not supplied."""

    def __init__(self, what: str = "this quantity"):
        super().__init__(f"curvature matrix unavailable: {what} needs the full matrix B "
                         "(flat model, or pass a curvature evaluator)")


def _t(x):
    return np.swapaxes(x, -1, -2)


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _apply(mats, x):
    """Stack (..., 3, d) of the products mats[a] @ x for mats of shape (3, d, d)."""
    return np.moveaxis(np.tensordot(mats, x, axes=(-1, -1)), (0, 1), (-2, -1))


@dataclass(frozen=True)
class StructuralSlice:
    """Structural matrices at one time (or a stack of times).

    B is None when the curvature matrix is unavailable. Derivative fields
    (A_dot, C_dot, ...) come from closed forms, not numerical differencing.
    """

    n: int
    S: float
    u: np.ndarray
    v: np.ndarray
    u_dot: np.ndarray
    v_dot: np.ndarray
    v_ddot: np.ndarray
    A: np.ndarray
    A_dot: np.ndarray
    A_ddot: np.ndarray
    C: np.ndarray
    C_dot: np.ndarray
    V: np.ndarray
    V_dot: np.ndarray
    V_ddot: np.ndarray
    G: np.ndarray
    G_dot: np.ndarray
    P: np.ndarray
    L: np.ndarray
    D: np.ndarray
    M: np.ndarray
    N: np.ndarray
    B: np.ndarray | None

    @property
    def dim(self) -> int:
        return 4 * self.n

    @property
    def batch_shape(self) -> tuple:
        return self.u.shape[:-1]

    def require_B(self, what: str) -> np.ndarray:
        if self.B is None:
            raise CurvatureUnavailable(what)
        return self.B

    def frame_derivative(self, allow_partial: bool = False) -> np.ndarray:
        """Matrix Phi with d/dt (frame) = Phi (frame), shape (..., 2d+6, 2d+6).

        B only enters the ->u rows; ``allow_partial`` zeroes it when absent,
        which is exact for fields without ->u, ->v components.
        """
        if self.B is None and allow_partial:
            B = 0.0
        else:
            B = self.require_B("the Hamiltonian-frame derivative")
        d = self.dim
        shape = self.batch_shape + (2 * d + 6, 2 * d + 6)
        Phi = np.zeros(shape)
        pu, pv, qu, qv = _blocks(d)
        Phi[..., pu, qu] = -np.eye(d)
        Phi[..., pu, pv] = self.G
        Phi[..., pv, pu] = 2.0 * self.A
        Phi[..., qu, qu] = 2.0 * self.C
        Phi[..., qu, qv] = -2.0 * _t(self.A)
        Phi[..., qu, pu] = B
        Phi[..., qu, pv] = self.D
        Phi[..., qv, qu] = self.L
        Phi[..., qv, pu] = self.M
        Phi[..., qv, pv] = 2.0 * self.N
        return Phi


def _blocks(d):
    return slice(0, d), slice(d, d + 3), slice(d + 3, 2 * d + 3), slice(2 * d + 3, 2 * d + 6)


def tensor_curvature(R4):
    """Curvature evaluator u -> B from a (d, d, d, d) array R4[X, Y, Z, V].

    B_{il} = R(u, X_l, X_i, u).
    """
    R4 = np.asarray(R4, dtype=float)

    def B_eval(u):
        return np.einsum("...a,alib,...b->...il", u, R4, u)

    return B_eval


def structural_slice(M: QcModelData, u, v, B_eval=None) -> StructuralSlice:
    """Structural matrices of the Hamiltonian frame at momentum (u, v).

    Constant-tensor models: D = N = 0 and M keeps only its horizontal Ricci
    form term. B is zero for the flat model, B_eval(u) if given, else None.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    I = M.Q.I
    d = M.dim
    if u.shape[-1] != d or v.shape[-1] != 3:
        raise ValueError(f"expected u in R^{d} and v in R^3")
    if np.any(np.linalg.norm(u, axis=-1) == 0.0):
        raise ValueError("u = 0 is not a length-parametrizable extremal")

    K = torsion_matrices(M)
    A = _apply(I, u)
    C = -np.tensordot(v, I, axes=(-1, 0))
    u_dot = -2.0 * np.einsum("...a,...ai->...i", v, A)
    Ku = _apply(K, u)  # (K_a u)_i
    KTu = _apply(np.swapaxes(K, -1, -2), u)  # (u^T K_a)_i
    v_dot = np.einsum("...ai,...i->...a", Ku, u)
    v_ddot = (np.einsum("...ai,...i->...a", Ku, u_dot)
              + np.einsum("...ai,...i->...a", KTu, u_dot))
    V, V_dot, V_ddot = so3_hat(v), so3_hat(v_dot), so3_hat(v_ddot)
    vv = np.einsum("...a,...a->...", v, v)[..., None, None]

    A_dot = 2.0 * V @ A + 2.0 * _outer(v, u)
    A_ddot = 2.0 * V_dot @ A + 2.0 * _outer(v_dot, u) - 4.0 * vv * A
    C_dot = -np.tensordot(v_dot, I, axes=(-1, 0))

    G = -_t(KTu)
    G_dot = -_t(_apply(np.swapaxes(K, -1, -2), u_dot))
    P = _t(Ku)
    L = -0.5 * (_apply(np.swapaxes(I, -1, -2), u @ M.T0) + A @ M.T0)

    # horizontal Ricci forms rho_zeta(X_l, u), shape (..., 3, d)
    R = _apply(rho_matrices(M), u)
    Mmat = 2.0 * V @ R
    D = np.zeros(u.shape[:-1] + (d, 3))
    N = np.zeros(u.shape[:-1] + (3, 3))

    if M.kind == "flat":
        B = np.zeros(u.shape[:-1] + (d, d))
    elif B_eval is not None:
        B = np.asarray(B_eval(u), dtype=float)
    else:
        B = None

    return StructuralSlice(
        n=M.n, S=M.S, u=u, v=v, u_dot=u_dot, v_dot=v_dot, v_ddot=v_ddot,
        A=A, A_dot=A_dot, A_ddot=A_ddot, C=C, C_dot=C_dot,
        V=V, V_dot=V_dot, V_ddot=V_ddot, G=G, G_dot=G_dot, P=P, L=L,
        D=D, M=Mmat, N=N, B=B,
    )


# --- tangent vectors to T*M -------------------------------------------------

@dataclass(frozen=True)
class PhaseTangent:
    """A k-tuple of tangent vectors: rows of pu (k, 4n), pv (k, 3), qu (k, 4n), qv (k, 3).

    Leading batch axes are allowed in front of k.
    """

    pu: np.ndarray
    pv: np.ndarray
    qu: np.ndarray
    qv: np.ndarray

    # let ndarray @ PhaseTangent dispatch to __rmatmul__
    __array_ufunc__ = None

    @classmethod
    def zeros(cls, k: int, d: int, batch: tuple = ()) -> "PhaseTangent":
        z = lambda m: np.zeros(batch + (k, m))  # noqa: E731
        return cls(z(d), z(3), z(d), z(3))

    @classmethod
    def from_coeffs(cls, c, d: int) -> "PhaseTangent":
        pu, pv, qu, qv = _blocks(d)
        return cls(c[..., pu], c[..., pv], c[..., qu], c[..., qv])

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([self.pu, self.pv, self.qu, self.qv], axis=-1)

    @property
    def vertical(self) -> bool:
        return not (np.any(self.qu) or np.any(self.qv))

    def _map(self, f, other=None):
        if other is None:
            return PhaseTangent(f(self.pu), f(self.pv), f(self.qu), f(self.qv))
        return PhaseTangent(f(self.pu, other.pu), f(self.pv, other.pv),
                            f(self.qu, other.qu), f(self.qv, other.qv))

    def __add__(self, other):
        return self._map(np.add, other)

    def __sub__(self, other):
        return self._map(np.subtract, other)

    def __neg__(self):
        return self._map(np.negative)

    def __mul__(self, s):
        return self._map(lambda a: a * s)

    __rmul__ = __mul__

    def __rmatmul__(self, L):
        """L @ x: rows of the result are linear combinations of the rows of x."""
        L = np.asarray(L, dtype=float)
        return self._map(lambda a: L @ a)


def basis_du(d, batch=()):
    x = PhaseTangent.zeros(d, d, batch)
    return PhaseTangent(np.broadcast_to(np.eye(d), batch + (d, d)).copy(), x.pv, x.qu, x.qv)


def basis_dv(d, batch=()):
    x = PhaseTangent.zeros(3, d, batch)
    return PhaseTangent(x.pu, np.broadcast_to(np.eye(3), batch + (3, 3)).copy(), x.qu, x.qv)


def basis_arrow_u(d, batch=()):
    x = PhaseTangent.zeros(d, d, batch)
    return PhaseTangent(x.pu, x.pv, np.broadcast_to(np.eye(d), batch + (d, d)).copy(), x.qv)


def basis_arrow_v(d, batch=()):
    x = PhaseTangent.zeros(3, d, batch)
    return PhaseTangent(x.pu, x.pv, x.qu, np.broadcast_to(np.eye(3), batch + (3, 3)).copy())


def sympl(sl: StructuralSlice, x: PhaseTangent, y: PhaseTangent) -> np.ndarray:
    """Matrix of symplectic products sigma(x_i, y_j) from the Hamiltonian-frame table.

    sigma(d/du, ->u) = 1, sigma(d/dv, ->v) = 1, sigma(->u, ->u) = -2C,
    sigma(->v, ->v) = S V (the chi correction vanishes for constant models),
    sigma(->u, ->v) = P; all other pairs vanish.
    """
    out = x.pu @ _t(y.qu) - x.qu @ _t(y.pu) + x.pv @ _t(y.qv) - x.qv @ _t(y.pv)
    out = out + x.qu @ (-2.0 * sl.C) @ _t(y.qu)
    out = out + x.qv @ (sl.S * sl.V) @ _t(y.qv)
    out = out + x.qu @ sl.P @ _t(y.qv) - x.qv @ _t(sl.P) @ _t(y.qu)
    return out


def frame_motion(sl: StructuralSlice, x: PhaseTangent) -> PhaseTangent:
    """x . Phi computed blockwise: the part of d/dt x due to the moving Hamiltonian frame.

    The B term is skipped when x has no ->u component (then B is not needed).
    """
    pu = x.pv @ (2.0 * sl.A) + x.qv @ sl.M
    if np.any(x.qu):
        pu = pu + x.qu @ sl.require_B("transport of a field with ->u components")
    pv = x.pu @ sl.G + x.qu @ sl.D + x.qv @ (2.0 * sl.N)
    qu = -x.pu + x.qu @ (2.0 * sl.C) + x.qv @ sl.L
    qv = x.qu @ (-2.0 * _t(sl.A))
    return PhaseTangent(pu, pv, qu, qv)


def transport(sl: StructuralSlice, x: PhaseTangent, coeff_dot: PhaseTangent) -> PhaseTangent:
    """Derivative along the extremal of a field with coefficients x(t):
    coefficient derivative plus the motion of the Hamiltonian frame."""
    return coeff_dot + frame_motion(sl, x)


def dv_derivatives(sl: StructuralSlice, allow_partial: bool = False):
    """(d_v, d_v', d_v'', d_v''') as 3-tuples of tangent vectors.

    The third derivative carries -2AB in its d/du component. With
    ``allow_partial`` and B unavailable that term is dropped; pairings with
    fields whose ->u component vanishes are unaffected.
    """
    d = sl.dim
    batch = sl.batch_shape
    A, Ad, Add, G, Gd, C = sl.A, sl.A_dot, sl.A_ddot, sl.G, sl.G_dot, sl.C
    if sl.B is None and not allow_partial:
        raise CurvatureUnavailable("the third derivative of d/dv")
    B = np.zeros(batch + (d, d)) if sl.B is None else sl.B
    z3d = np.zeros(batch + (3, d))
    z33 = np.zeros(batch + (3, 3))
    d0 = PhaseTangent(z3d, np.broadcast_to(np.eye(3), batch + (3, 3)).copy(), z3d, z33)
    d1 = PhaseTangent(2.0 * A, z33, z3d, z33)
    d2 = PhaseTangent(2.0 * Ad, 2.0 * A @ G, -2.0 * A, z33)
    d3 = PhaseTangent(
        2.0 * Add + 4.0 * A @ G @ A - 2.0 * A @ B,
        4.0 * Ad @ G + 2.0 * A @ Gd - 2.0 * A @ sl.D,
        -4.0 * Ad - 4.0 * A @ C,
        4.0 * A @ _t(A),
    )
    return d0, d1, d2, d3


# --- canonical frame --------------------------------------------------------

@dataclass(frozen=True)
class FrameState:
    t: float
    O: np.ndarray
    Y: np.ndarray
    W: np.ndarray


def complete_rows(A0, seed=None, skip: float = GS_SKIP) -> np.ndarray:
    """Orthonormal basis (as rows) of the orthogonal complement of the rows of A0.

    Gram-Schmidt against the rows of A0, trying the rows of ``seed`` and then
    the standard basis as candidates; near-parallel candidates are skipped.
    """
    A0 = np.asarray(A0, dtype=float)
    k, d = A0.shape
    cands = np.eye(d) if seed is None else np.vstack([np.asarray(seed, dtype=float), np.eye(d)])
    basis = [r / np.linalg.norm(r) for r in A0]
    if np.max(np.abs(np.array(basis) @ np.array(basis).T - np.eye(k))) > 1e-10:
        raise ValueError("rows of A(0) are not orthonormal")
    out = []
    for c in cands:
        if len(out) == d - k:
            break
        w = c.copy()
        for _ in range(2):
            for b in basis + out:
                w -= (b @ w) * b
        norm = np.linalg.norm(w)
        if norm < skip:
            continue
        out.append(w / norm)
    if len(out) != d - k:
        raise ValueError("orthonormal completion failed")
    return np.array(out)


def frame_rhs(M: QcModelData):
    """Coupled vector field for (u, v, O, Y): O' = -3/2 O V, Y' = -Y (u v^T A + C)."""
    f_uv = extremal_rhs(M)
    I = M.Q.I

    def f(y):
        u, v, O, Y = y
        du, dv = f_uv((u, v))
        A = np.einsum("aij,...j->...ai", I, u)
        C = -np.einsum("...a,aij->...ij", v, I)
        dO = -1.5 * O @ so3_hat(v)
        Yu = np.einsum("...ij,...j->...i", Y, u)
        dY = -(_outer(Yu, np.einsum("...a,...ai->...i", v, A)) + Y @ C)
        return du, dv, dO, dY

    return f


def initial_frame(M: QcModelData, s0: ExtremalState, Y0_seed=None, O0=None):
    """Initial (O, Y): O = identity unless given, Y completes the rows of A(0).

    ``s0.u`` may be a stack of covectors (N, 4n); the frames are then stacked too.
    """
    u = np.asarray(s0.u, dtype=float)
    norms = np.linalg.norm(u, axis=-1)
    if np.any(norms == 0.0):
        raise ValueError("u = 0 is not a length-parametrizable extremal")
    A0 = np.einsum("aij,...j->...ai", M.Q.I, u / norms[..., None])
    if u.ndim == 1:
        Y0 = complete_rows(A0, Y0_seed)
    else:
        Y0 = np.stack([complete_rows(a, Y0_seed) for a in A0])
    O0 = np.eye(3) if O0 is None else np.asarray(O0, dtype=float)
    O0 = np.broadcast_to(O0, u.shape[:-1] + (3, 3)).copy()
    return O0, Y0


@dataclass(frozen=True)
class FrameTrack:
    """Sampled extremal with its canonical frame data, as stacked arrays."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    O: np.ndarray
    Y: np.ndarray

    @property
    def W(self) -> np.ndarray:
        return _outer(np.einsum("...ij,...j->...i", self.Y, self.u), self.v)

    def states(self):
        W = self.W
        return [FrameState(float(t), O, Y, w) for t, O, Y, w in zip(self.t, self.O, self.Y, W)]


def evolve_frame_track(M: QcModelData, s0: ExtremalState, T: float, dt: float = DEFAULT_DT,
                       Y0_seed=None, O0=None) -> FrameTrack:
    if not dt > 0:
        raise ValueError("dt must be positive")
    O0, Y0 = initial_frame(M, s0, Y0_seed, O0)
    steps = int(round(T / dt))
    f = frame_rhs(M)
    y = (s0.u, s0.v, O0, Y0)
    rows = [y]
    for _ in range(steps):
        u, v, O, Y = rk4_step(f, y, dt)
        y = (keep_norm(u, y[0]), v, O, Y)
        rows.append(y)
    t = s0.t + dt * np.arange(steps + 1)
    return FrameTrack(t, *(np.stack(c) for c in zip(*rows)))


def evolve_frame(M: QcModelData, trajectory, Y0_seed=None, O0=None):
    """Canonical-frame data (O, Y, W) at every sample of a uniformly sampled extremal.

    The frame ODE is integrated jointly with (u, v) by the same RK4 scheme, so
    the returned samples line up with ``trajectory``.
    """
    traj = list(trajectory)
    if len(traj) < 2:
        O0, Y0 = initial_frame(M, traj[0], Y0_seed, O0)
        W0 = _outer(Y0 @ traj[0].u, traj[0].v)
        return [FrameState(traj[0].t, O0, Y0, W0)]
    dt = traj[1].t - traj[0].t
    track = evolve_frame_track(M, traj[0], traj[-1].t - traj[0].t, dt, Y0_seed, O0)
    drift = max(np.max(np.abs(track.u[-1] - traj[-1].u)), np.max(np.abs(track.v[-1] - traj[-1].v)))
    if len(track.t) != len(traj) or drift > 1e-9:
        raise ValueError("trajectory is not a uniformly sampled RK4 extremal of this model")
    return track.states()


@dataclass(frozen=True)
class CanonicalVectors:
    Ea: PhaseTangent
    Eb: PhaseTangent
    Fb: PhaseTangent
    Ec: PhaseTangent
    Fc: PhaseTangent


def frame_matrices(sl: StructuralSlice, O, Y):
    """W, W', W'', O', Y' from the frame equations."""
    u, v = sl.u, sl.v
    Yu = np.einsum("...ij,...j->...i", Y, u)
    W = _outer(Yu, v)
    W_dot = _outer(Yu, sl.v_dot)
    Y_dot = -(_outer(Yu, np.einsum("...a,...ai->...i", v, sl.A)) + Y @ sl.C)
    O_dot = -1.5 * O @ sl.V
    Yu_dot = np.einsum("...ij,...j->...i", Y_dot, u) + np.einsum("...ij,...j->...i", Y, sl.u_dot)
    W_ddot = _outer(Yu_dot, sl.v_dot) + _outer(Yu, sl.v_ddot)
    return W, W_dot, W_ddot, O_dot, Y_dot


def canonical_vectors(sl: StructuralSlice, O, Y) -> CanonicalVectors:
    """E_a, E_b, F_b, E_c, F_c assembled from the frame data (O, Y)."""
    O = np.asarray(O, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d0, d1, d2, _ = dv_derivatives(sl, allow_partial=True)
    V, Vd = sl.V, sl.V_dot
    W, W_dot, _, _, _ = frame_matrices(sl, O, Y)
    Ea = (0.5 * O) @ d0
    Eb = (0.5 * O) @ ((-1.5 * V) @ d0 + d1)
    Fb = -((0.5 * O) @ ((2.25 * V @ V - 1.5 * Vd) @ d0 - (3.0 * V) @ d1 + d2))
    k = Y.shape[-2]
    batch = sl.batch_shape
    Ec = PhaseTangent(Y.copy(), W, np.zeros(batch + (k, sl.dim)), np.zeros(batch + (k, 3)))
    Fc = PhaseTangent(Y @ sl.C - W @ sl.A, -(Y @ sl.G + W_dot), Y.copy(), np.zeros(batch + (k, 3)))
    return CanonicalVectors(Ea, Eb, Fb, Ec, Fc)


def dot_Fb(sl: StructuralSlice, O) -> PhaseTangent:
    """Derivative of F_b by the product rule (V and V' need not commute)."""
    d0, d1, d2, d3 = dv_derivatives(sl)
    V, Vd, Vdd = sl.V, sl.V_dot, sl.V_ddot
    O_dot = -1.5 * O @ V
    X = (2.25 * V @ V - 1.5 * Vd) @ d0 - (3.0 * V) @ d1 + d2
    X_dot = ((2.25 * (Vd @ V + V @ Vd) - 1.5 * Vdd) @ d0
             + (2.25 * V @ V - 1.5 * Vd) @ d1 - (3.0 * Vd) @ d1
             - (3.0 * V) @ d2 + d3)
    return -((0.5 * O_dot) @ X + (0.5 * O) @ X_dot)


def dot_Fc(sl: StructuralSlice, O, Y) -> PhaseTangent:
    """Derivative of F_c: coefficient derivatives plus frame transport."""
    Y = np.asarray(Y, dtype=float)
    W, W_dot, W_ddot, _, Y_dot = frame_matrices(sl, O, Y)
    Fc = canonical_vectors(sl, O, Y).Fc
    coeff_dot = PhaseTangent(
        Y_dot @ sl.C + Y @ sl.C_dot - W_dot @ sl.A - W @ sl.A_dot,
        -(Y_dot @ sl.G + Y @ sl.G_dot + W_ddot),
        Y_dot,
        np.zeros_like(Fc.qv),
    )
    return transport(sl, Fc, coeff_dot)


def rcc(sl: StructuralSlice, Y) -> np.ndarray:
    """R_cc = Y [B + C' + |v|^2 (1 - u u^T)] Y^T."""
    B = sl.require_B("R_cc")
    Y = np.asarray(Y, dtype=float)
    vv = np.einsum("...a,...a->...", sl.v, sl.v)[..., None, None]
    inner = B + sl.C_dot + vv * (np.eye(sl.dim) - _outer(sl.u, sl.u))
    return Y @ inner @ _t(Y)


def rcc_direct(M: QcModelData, u, v, Y, B) -> np.ndarray:
    """R_cc from (u, v, Y) and a given B without building a full slice."""
    K = torsion_matrices(M)
    v_dot = np.einsum("...i,aij,...j->...a", u, K, u)
    C_dot = -np.einsum("...a,aij->...ij", v_dot, M.Q.I)
    vv = np.einsum("...a,...a->...", v, v)[..., None, None]
    inner = B + C_dot + vv * (np.eye(M.dim) - _outer(u, u))
    return Y @ inner @ _t(Y)


def rcc_symplectic(sl: StructuralSlice, O, Y) -> np.ndarray:
    """R_cc = sigma(F_c', F_c) evaluated through the symplectic table."""
    cv = canonical_vectors(sl, O, Y)
    return sympl(sl, dot_Fc(sl, O, Y), cv.Fc)


def rcb(sl: StructuralSlice, O, Y) -> np.ndarray:
    """R_cb = sigma(F_c', F_b)."""
    cv = canonical_vectors(sl, O, Y)
    return sympl(sl, dot_Fc(sl, O, Y), cv.Fb)


def trace_rcc(M: QcModelData, u, v):
    """trace(R_cc) = Ric(u,u) - sum_a R(u, I_a u, I_a u, u) + 4(n-1)|v|^2 for unit u."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (ric(M, u, u) - sum_sectional(M, u)
            + 4 * (M.n - 1) * np.einsum("...a,...a->...", v, v))
