"""Normal extremals in Fermi components, and the flat-model exponential map.

Along an extremal the horizontal momentum u (= velocity of the geodesic) and
the vertical momentum v obey

    u' = -2 sum_a v_a I_a u,        v'_a = T(xi_a, u, u).

For the quaternionic Heisenberg group the same (u, v) system is integrated
together with group coordinates (z, w) in H^n + Im H, using the group law
(z, w)(z', w') = (z + z', w + w' + 1/2 Im(z conj(z'))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import quat_conj, quat_mul
from .model import QcModelData, torsion_matrices
from .ode import rk4_step

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class ExtremalState:
    t: float
    u: np.ndarray
    v: np.ndarray

    @property
    def hamiltonian(self) -> float:
        return 0.5 * float(self.u @ self.u)


@dataclass(frozen=True)
class GroupPoint:
    z: np.ndarray  # R^{4n}, blocks ordered (1, i, j, k)
    w: np.ndarray  # R^3

    @classmethod
    def identity(cls, n: int) -> "GroupPoint":
        return cls(np.zeros(4 * n), np.zeros(3))


def initial_state(u0, v0, normalize: bool = False) -> ExtremalState:
    u0 = np.array(u0, dtype=float)
    v0 = np.array(v0, dtype=float)
    if v0.shape != (3,):
        raise ValueError("v must have three components")
    if u0.ndim != 1 or u0.size % 4:
        raise ValueError("u must have 4n components")
    if normalize:
        norm = np.linalg.norm(u0)
        if norm == 0.0:
            raise ValueError("u must be non-zero")
        u0 = u0 / norm
    return ExtremalState(0.0, u0, v0)


def extremal_rhs(M: QcModelData):
    """Vector field of the (u, v) system, vectorized over leading axes."""
    I = M.Q.I
    K = None if M.torsion_free else torsion_matrices(M)

    def f(y):
        u, v = y
        # sum_a v_a I_a u, batched: (..., 3) x (3, d, d) x (..., d)
        Iu = np.einsum("aij,...j->...ai", I, u)
        du = -2.0 * np.einsum("...a,...ai->...i", v, Iu)
        if K is None:
            dv = np.zeros_like(v)
        else:
            dv = np.einsum("...i,aij,...j->...a", u, K, u)
        return du, dv

    return f


def keep_norm(u_new, u_old):
    """Rescale u_new to the norm of u_old.

    The exact flow rotates u, so |u| is invariant; RK4 only keeps it to
    O(dt^5) per step. Projecting back stops that drift from feeding identities
    that assume a length-parametrized extremal.
    """
    return u_new * (np.linalg.norm(u_old, axis=-1, keepdims=True)
                    / np.linalg.norm(u_new, axis=-1, keepdims=True))


def flow_step(M: QcModelData, s: ExtremalState, dt: float) -> ExtremalState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    u, v = rk4_step(extremal_rhs(M), (s.u, s.v), dt)
    return ExtremalState(s.t + dt, keep_norm(u, s.u), v)


def integrate(M: QcModelData, s0: ExtremalState, T: float, dt: float = DEFAULT_DT):
    """Trajectory sampled at multiples of dt on [0, T] (T rounded to the grid)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    steps = int(round(T / dt))
    f = extremal_rhs(M)
    y = (s0.u, s0.v)
    out = [s0]
    for k in range(1, steps + 1):
        u, v = rk4_step(f, y, dt)
        y = (keep_norm(u, y[0]), v)
        out.append(ExtremalState(s0.t + k * dt, y[0], y[1]))
    return out


def trajectory_arrays(traj):
    """Stack a trajectory into arrays (t, u, v)."""
    t = np.array([s.t for s in traj])
    u = np.stack([s.u for s in traj])
    v = np.stack([s.v for s in traj])
    return t, u, v


def reverse(s: ExtremalState) -> ExtremalState:
    """Momentum flip (u, v) -> (-u, -v); integrating it forward runs the extremal backward."""
    return ExtremalState(s.t, -s.u, -s.v)


# --- quaternionic Heisenberg group -----------------------------------------

def im_hermitian(z, zp):
    """Im(sum_k z_k conj(zp_k)) over the n quaternion blocks, components (i, j, k)."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    zb = z.reshape(z.shape[:-1] + (-1, 4))
    zpb = zp.reshape(zp.shape[:-1] + (-1, 4))
    return quat_mul(zb, quat_conj(zpb)).sum(axis=-2)[..., 1:]


def group_product(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    return GroupPoint(p.z + q.z, p.w + q.w + 0.5 * im_hermitian(p.z, q.z))


def heisenberg_rhs(n: int):
    from .algebra import standard_structure

    I = standard_structure(n).I

    def f(y):
        z, w, u, v = y
        Iu = np.einsum("aij,...j->...ai", I, u)
        du = -2.0 * np.einsum("...a,...ai->...i", v, Iu)
        dw = 0.5 * im_hermitian(z, u)
        return u, dw, du, np.zeros_like(v)

    return f


def heisenberg_exp(n: int, u0, v0, T: float, dt: float = DEFAULT_DT,
                   start: GroupPoint | None = None) -> GroupPoint:
    """Endpoint of the flat-model geodesic with initial covector (u0, v0).

    ``u0``/``v0`` may carry leading batch axes; the result then does too.
    """
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if start is None:
        start = GroupPoint.identity(n)
    z = np.broadcast_to(start.z, u0.shape).copy()
    w = np.broadcast_to(start.w, v0.shape).copy()
    y = (z, w, u0.copy(), v0.copy())
    f = heisenberg_rhs(n)
    steps = int(np.floor(T / dt + 1e-9))
    for _ in range(steps):
        y = rk4_step(f, y, dt)
    rest = T - steps * dt
    if rest > 1e-15:
        y = rk4_step(f, y, rest)
    return GroupPoint(y[0], y[1])
