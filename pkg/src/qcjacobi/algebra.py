"""Quaternionic structures on R^{4n}.

The horizontal space is (R^4)^n with the standard inner product. Each block
has basis ordered (1, i, j, k) and the almost complex structures I1, I2, I3
act blockwise as left multiplication by i, j, k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VALIDATION_TOL = 1e-12

# (alpha, beta, tau) cyclic, zero-based
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class StructureError(ValueError):
    """Raised for malformed quaternionic structures (wrong shapes, bad n)."""


def quat_mul(a, b):
    """Hamilton product of quaternion arrays with trailing axis (1, i, j, k)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def quat_conj(a):
    a = np.array(a, dtype=float)
    a[..., 1:] *= -1.0
    return a


def _left_mult_matrix(q) -> np.ndarray:
    """4x4 matrix of x -> q*x in the basis (1, i, j, k)."""
    return np.stack([quat_mul(q, e) for e in np.eye(4)], axis=1)


@dataclass(frozen=True)
class QuaternionicStructure:
    n: int
    I: np.ndarray  # shape (3, 4n, 4n)

    def __post_init__(self):
        I = np.array(self.I, dtype=float)
        if I.ndim != 3 or I.shape[0] != 3:
            raise StructureError(f"expected three matrices, got array of shape {I.shape}")
        dim = 4 * self.n
        if I.shape[1:] != (dim, dim):
            raise StructureError(f"matrices must be {dim}x{dim} for n={self.n}, got {I.shape[1:]}")
        I.setflags(write=False)
        object.__setattr__(self, "I", I)

    @property
    def dim(self) -> int:
        return 4 * self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "I1": self.I[0].tolist(),
            "I2": self.I[1].tolist(),
            "I3": self.I[2].tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuaternionicStructure":
        try:
            n = int(data["n"])
            I = np.array([data["I1"], data["I2"], data["I3"]], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed structure document: {exc}") from exc
        return cls(n=n, I=I)


def standard_structure(n: int) -> QuaternionicStructure:
    if int(n) != n or n < 2:
        raise StructureError(f"quaternionic rank must be an integer n >= 2, got {n!r}")
    n = int(n)
    blocks = [_left_mult_matrix(e) for e in np.eye(4)[1:]]
    I = np.stack([np.kron(np.eye(n), b) for b in blocks])
    return QuaternionicStructure(n=n, I=I)


def validate_structure(Q: QuaternionicStructure, tol: float = VALIDATION_TOL) -> dict:
    """Max-norm residuals of the quaternion relations and orthogonality.

    Returns a dict with ``residuals`` (name -> float) and ``passed``.
    """
    I = Q.I
    eye = np.eye(Q.dim)
    res = {}
    for a in range(3):
        res[f"orthogonal-I{a + 1}"] = np.max(np.abs(I[a] @ I[a].T - eye))
        res[f"square-I{a + 1}"] = np.max(np.abs(I[a] @ I[a] + eye))
    for a, b, t in CYCLIC:
        res[f"I{a + 1}I{b + 1}=I{t + 1}"] = np.max(np.abs(I[a] @ I[b] - I[t]))
        res[f"I{a + 1}I{b + 1}=-I{b + 1}I{a + 1}"] = np.max(np.abs(I[a] @ I[b] + I[b] @ I[a]))
    res["I1I2I3=-id"] = np.max(np.abs(I[0] @ I[1] @ I[2] + eye))
    res = {k: float(v) for k, v in res.items()}
    return {"residuals": res, "passed": all(v < tol for v in res.values())}


def omega(Q: QuaternionicStructure, alpha: int, X, Y) -> float:
    """Fundamental 2-form omega_alpha(X, Y) = <I_alpha X, Y>; alpha in {1, 2, 3}."""
    return float(np.dot(Q.I[alpha - 1] @ X, Y))


def fatness_gram(Q: QuaternionicStructure, X) -> np.ndarray:
    IX = Q.I @ np.asarray(X, dtype=float)
    return -2.0 * IX @ IX.T


def casimir(Q: QuaternionicStructure, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    return -np.einsum("aij,jk,akl->il", Q.I, psi, Q.I)


def decompose(Q: QuaternionicStructure, psi):
    """Split psi into its Casimir eigencomponents (psi_[3], psi_[-1])."""
    psi = np.asarray(psi, dtype=float)
    p3 = 0.25 * (casimir(Q, psi) + psi)
    return p3, psi - p3


def so3_hat(v) -> np.ndarray:
    """3x3 skew matrix V with V_{ab} = v_{ab} (quaternion product index).

    V = [[0, v3, -v2], [-v3, 0, v1], [v2, -v1, 0]]; works on stacked v.
    """
    v = np.asarray(v, dtype=float)
    v1, v2, v3 = v[..., 0], v[..., 1], v[..., 2]
    z = np.zeros_like(v1)
    return np.stack(
        [
            np.stack([z, v3, -v2], axis=-1),
            np.stack([-v3, z, v1], axis=-1),
            np.stack([v2, -v1, z], axis=-1),
        ],
        axis=-2,
    )
