"""Fixed-step classical Runge-Kutta on arrays or tuples of arrays."""

from __future__ import annotations


def _axpy(y, k, h):
    if isinstance(y, tuple):
        return tuple(a + h * b for a, b in zip(y, k))
    return y + h * k


def _combine(y, k1, k2, k3, k4, h):
    if isinstance(y, tuple):
        return tuple(
            a + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(f, y, h: float):
    """One RK4 step of the autonomous system y' = f(y).

    ``y`` may be an ndarray of any shape (leading batch axes are fine) or a
    tuple of ndarrays, in which case ``f`` returns a tuple of the same layout.
    """
    k1 = f(y)
    k2 = f(_axpy(y, k1, 0.5 * h))
    k3 = f(_axpy(y, k2, 0.5 * h))
    k4 = f(_axpy(y, k3, h))
    return _combine(y, k1, k2, k3, k4, h)

