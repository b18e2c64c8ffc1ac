"""Constant-tensor qc models and their curvature contractions.

A model stores the torsion tensors T0 and U as symmetric 4n x 4n matrices in
the fixed orthonormal horizontal basis, and the normalized qc scalar curvature
S. All tensors are parallel (constant), which is what the flat quaternionic
Heisenberg group and the 3-Sasakian spheres look like in Fermi components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import QuaternionicStructure, casimir, omega, standard_structure

MODEL_TOL = 1e-10
UNIT_TOL = 1e-10
KINDS = ("flat", "sasakian", "custom")


class ModelValidationError(ValueError):
    """A custom model violates the torsion invariants.

    ``failures`` maps the failed property name (e.g. ``"propt-line-1"``) to
    its residual.
    """

    def __init__(self, failures: dict):
        self.failures = dict(failures)
        names = ", ".join(f"{k} (residual {v:.3e})" for k, v in self.failures.items())
        super().__init__(f"invalid qc model: {names}")


@dataclass(frozen=True)
class QcModelData:
    Q: QuaternionicStructure
    T0: np.ndarray
    U: np.ndarray
    S: float
    kind: str = "custom"

    def __post_init__(self):
        for name in ("T0", "U"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "S", float(self.S))

    @property
    def n(self) -> int:
        return self.Q.n

    @property
    def dim(self) -> int:
        return self.Q.dim

    @property
    def torsion_free(self) -> bool:
        return not (np.any(self.T0) or np.any(self.U))


def model_residuals(Q: QuaternionicStructure, T0, U) -> dict:
    T0 = np.asarray(T0, dtype=float)
    U = np.asarray(U, dtype=float)
    I = Q.I
    # I^T U I = U  <=>  U commutes with I (I orthogonal)
    line2 = max(np.max(np.abs(I[a].T @ U @ I[a] - U)) for a in range(3))
    return {
        "T0-symmetric": float(np.max(np.abs(T0 - T0.T))),
        "T0-trace-free": float(abs(np.trace(T0))),
        "propt-line-1": float(np.max(np.abs(T0 + np.einsum("aji,jk,akl->il", I, T0, I)))),
        "U-symmetric": float(np.max(np.abs(U - U.T))),
        "U-trace-free": float(abs(np.trace(U))),
        "propt-line-2": float(line2),
    }


def make_model(kind: str, Q: QuaternionicStructure | None = None, T0=None, U=None,
               S: float | None = None, n: int | None = None,
               tol: float = MODEL_TOL) -> QcModelData:
    """Build a validated model record.

    ``flat`` has T0 = U = 0, S = 0; ``sasakian`` has T0 = U = 0, S = 2;
    ``custom`` takes T0, U, S from the caller and checks the torsion symmetries.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if Q is None:
        if n is None:
            raise ValueError("either a structure Q or a rank n is required")
        Q = standard_structure(n)
    zero = np.zeros((Q.dim, Q.dim))
    if kind == "flat":
        return QcModelData(Q=Q, T0=zero, U=zero, S=0.0, kind="flat")
    if kind == "sasakian":
        return QcModelData(Q=Q, T0=zero, U=zero, S=2.0, kind="sasakian")

    T0 = zero if T0 is None else np.asarray(T0, dtype=float)
    U = zero if U is None else np.asarray(U, dtype=float)
    S = 0.0 if S is None else float(S)
    if T0.shape != (Q.dim, Q.dim) or U.shape != (Q.dim, Q.dim):
        raise ValueError(f"T0 and U must be {Q.dim}x{Q.dim}")
    failures = {k: v for k, v in model_residuals(Q, T0, U).items() if v > tol}
    if failures:
        raise ModelValidationError(failures)
    return QcModelData(Q=Q, T0=T0, U=U, S=S, kind="custom")


def random_model(Q: QuaternionicStructure, rng: np.random.Generator, scale: float = 1.0,
                 S: float | None = None) -> QcModelData:
    """Random valid custom model: T0 in the [-1] and U in the trace-free [3] component."""
    d = Q.dim
    a = rng.standard_normal((d, d))
    b = rng.standard_normal((d, d))
    sa, sb = 0.5 * (a + a.T), 0.5 * (b + b.T)
    T0 = 0.75 * sa - 0.25 * casimir(Q, sa)  # projection onto the [-1] eigenspace
    U = 0.25 * (casimir(Q, sb) + sb)
    U -= np.trace(U) / d * np.eye(d)
    if S is None:
        S = float(rng.uniform(-2.0, 4.0))
    T0 = 0.5 * (T0 + T0.T)
    U = 0.5 * (U + U.T)
    return make_model("custom", Q, scale * T0, scale * U, S)


def _bil(M, X, Y):
    return np.einsum("...i,ij,...j->...", X, M, Y)


def torsion_xi(M: QcModelData, alpha: int, X, Y):
    """T(xi_alpha, X, Y) = -1/4 [T0(I X, Y) + T0(X, I Y)] + U(I X, Y)."""
    I = M.Q.I[alpha - 1]
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    IX = X @ I.T
    IY = Y @ I.T
    return -0.25 * (_bil(M.T0, IX, Y) + _bil(M.T0, X, IY)) + _bil(M.U, IX, Y)


def torsion_matrices(M: QcModelData) -> np.ndarray:
    """Matrices K_alpha with T(xi_alpha, X, Y) = X^T K_alpha Y, shape (3, 4n, 4n)."""
    I = M.Q.I
    IT = np.swapaxes(I, -1, -2)
    return -0.25 * (IT @ M.T0 + M.T0 @ I) + IT @ M.U


def ric(M: QcModelData, X, Y):
    n = M.n
    return ((2 * n + 2) * _bil(M.T0, X, Y) + (4 * n + 10) * _bil(M.U, X, Y)
            + 2 * (n + 2) * M.S * np.einsum("...i,...i->...", X, Y))


def rho_horizontal(M: QcModelData, alpha: int, X, Y):
    """rho_alpha(X, I_alpha Y) from the torsion closed form."""
    I = M.Q.I[alpha - 1]
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    IX, IY = X @ I.T, Y @ I.T
    return (-0.5 * (_bil(M.T0, X, Y) + _bil(M.T0, IX, IY)) - 2.0 * _bil(M.U, X, Y)
            - M.S * np.einsum("...i,...i->...", X, Y))


def rho(M: QcModelData, alpha: int, X, Z):
    """rho_alpha(X, Z) for horizontal X, Z (substitutes Y = -I_alpha Z)."""
    I = M.Q.I[alpha - 1]
    return rho_horizontal(M, alpha, X, -np.asarray(Z, dtype=float) @ I.T)


def rho_matrices(M: QcModelData) -> np.ndarray:
    """Matrices H_alpha with rho_alpha(X, Z) = X^T H_alpha Z, shape (3, 4n, 4n)."""
    I = M.Q.I
    IT = np.swapaxes(I, -1, -2)
    d = M.dim
    # rho_alpha(X, I_alpha Y) as a bilinear form in (X, Y), then Y = -I_alpha Z
    F = -0.5 * (M.T0 + IT @ M.T0 @ I) - 2.0 * M.U - M.S * np.eye(d)
    return -F @ I


def _require_unit(X):
    X = np.asarray(X, dtype=float)
    if np.any(np.abs(np.linalg.norm(X, axis=-1) - 1.0) > UNIT_TOL):
        raise ValueError("X must be a unit vector")
    return X


def sum_sectional(M: QcModelData, X):
    """sum_alpha R(X, I_a X, I_a X, X) = 2 T0(X,X) + 18 U(X,X) + 6 S for unit X."""
    X = _require_unit(X)
    return 2.0 * _bil(M.T0, X, X) + 18.0 * _bil(M.U, X, X) + 6.0 * M.S


def bonnet_myers_form(M: QcModelData, X):
    X = _require_unit(X)
    n = M.n
    return (2 * n * _bil(M.T0, X, X) + (4 * n - 8) * _bil(M.U, X, X)
            + 2 * (n - 1) * M.S)


def kappa(M: QcModelData, return_witness: bool = False):
    """Largest kappa with bonnet_myers_form >= 4(n-1) kappa on the unit sphere.

    The form is quadratic, so the minimum is the smallest eigenvalue of
    2n T0 + (4n - 8) U shifted by 2(n-1) S.
    """
    n = M.n
    w, vecs = np.linalg.eigh(2 * n * M.T0 + (4 * n - 8) * M.U)
    k = (w[0] + 2 * (n - 1) * M.S) / (4 * (n - 1))
    if return_witness:
        x = vecs[:, 0]
        # deterministic sign
        j = int(np.argmax(np.abs(x)))
        return float(k), x * np.sign(x[j])
    return float(k)


def lemma_t0u_check(M: QcModelData, X):
    """(lhs, rhs, residual) for Ric(X,X) - sum_sectional(X) = bonnet_myers_form(X)."""
    X = _require_unit(X)
    lhs = ric(M, X, X) - sum_sectional(M, X)
    rhs = bonnet_myers_form(M, X)
    return lhs, rhs, np.abs(lhs - rhs)


def bianchi_rhs(M: QcModelData, X, Y, Z, V) -> float:
    """Torsion side of the first Bianchi identity:
    2 sum_cyc(X,Y,Z) sum_a omega_a(X,Y) T(xi_a, Z, V)."""
    total = 0.0
    for A, B, C in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        for a in (1, 2, 3):
            total += omega(M.Q, a, A, B) * torsion_xi(M, a, C, V)
    return float(2.0 * total)


def comp1_rhs(M: QcModelData, X, Y, Z, V) -> float:
    """Right-hand side of 3R(X,Y,Z,V) - sum_a R(I_a X, I_a Y, Z, V)."""
    g = np.dot
    T0 = lambda A, B: float(A @ M.T0 @ B)  # noqa: E731
    Uf = lambda A, B: float(A @ M.U @ B)  # noqa: E731
    I = M.Q.I
    val = 2.0 * (g(Y, Z) * T0(X, V) + g(X, V) * T0(Z, Y) - g(Z, X) * T0(Y, V)
                 - g(V, Y) * T0(Z, X))
    for a in range(3):
        w = lambda A, B: omega(M.Q, a + 1, A, B)  # noqa: E731
        Ia = I[a]
        val -= 2.0 * (w(Y, Z) * T0(X, Ia @ V) + w(X, V) * T0(Z, Ia @ Y)
                      - w(Z, X) * T0(Y, Ia @ V) - w(V, Y) * T0(Z, Ia @ X))
        val += (2.0 * w(X, Y) * (T0(Z, Ia @ V) - T0(Ia @ Z, V))
                - 8.0 * w(Z, V) * Uf(Ia @ X, Y)
                - 4.0 * M.S * w(X, Y) * w(Z, V))
    return float(val)


def check_curvature(M: QcModelData, R, X, Y, Z, V) -> dict:
    """Residuals of a caller-supplied curvature evaluator R(X, Y, Z, V)
    against the Bianchi and comp1 constraints."""
    I = M.Q.I
    b = R(X, Y, Z, V) + R(Y, Z, X, V) + R(Z, X, Y, V)
    c = 3.0 * R(X, Y, Z, V) - sum(R(I[a] @ X, I[a] @ Y, Z, V) for a in range(3))
    return {
        "bianchi": abs(b - bianchi_rhs(M, X, Y, Z, V)),
        "comp1": abs(c - comp1_rhs(M, X, Y, Z, V)),
    }


def model_to_dict(M: QcModelData) -> dict:
    custom = M.kind == "custom"
    return {
        "kind": M.kind,
        "n": M.n,
        "S": M.S,
        "T0": M.T0.tolist() if custom else None,
        "U": M.U.tolist() if custom else None,
    }


def model_from_dict(data: dict) -> QcModelData:
    try:
        kind = data["kind"]
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc
    Q = standard_structure(n)
    if kind != "custom":
        return make_model(kind, Q)
    T0 = data.get("T0")
    U = data.get("U")
    return make_model("custom", Q,
                      None if T0 is None else np.array(T0, dtype=float),
                      None if U is None else np.array(U, dtype=float),
                      data.get("S", 0.0))
