"""Perron-Frobenius helpers for nonnegative and Metzler matrices."""

from __future__ import annotations

import numpy as np


class NumericalDegeneracy(ArithmeticError):
    """A quantity that should be well defined is numerically degenerate."""


def spectral_radius(M, tol: float = 1e-13, max_iter: int = 2_000) -> float:
    """Perron-Frobenius eigenvalue of a nonnegative matrix.

    Power iteration from the uniform vector, stopped by the Collatz-Wielandt
    bracket ``min(Mx/x) <= rho <= max(Mx/x)`` once it is ``tol``-tight.
    Reducible or imprimitive cases where the bracket does not close fall
    back to the dense eigensolver.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return 0.0
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = M @ x
        norm = y.sum()
        if norm == 0.0:
            # nilpotent on the orbit of a positive vector: rho = 0
            return 0.0
        if np.all(x > 0):
            ratio = y / x
            lo, hi = ratio.min(), ratio.max()
            if hi - lo <= tol * hi:
                return float(0.5 * (lo + hi))
        x = y / norm
    return float(np.abs(np.linalg.eigvals(M)).max())


def left_null_vector(M, tol: float = 1e-10) -> np.ndarray:
    """Nonnegative row vector ``v`` with ``v @ M = 0`` and ``v.1 = 1``.

    ``M`` is expected to be Metzler with dominant eigenvalue zero; the
    eigenvector of ``M.T`` belonging to the rightmost eigenvalue is taken.
    """
    M = np.asarray(M, dtype=float)
    w, U = np.linalg.eig(M.T)
    k = int(np.argmax(w.real))
    if abs(w[k]) > 1e-8 * max(1.0, np.abs(M).max()):
        raise NumericalDegeneracy(f"rightmost eigenvalue {w[k]:.3g} is not zero")
    v = U[:, k].real
    v = v / v[np.argmax(np.abs(v))]
    scale = np.abs(v).max()
    v[np.abs(v) < tol * scale] = 0.0
    if np.any(v < 0):
        raise NumericalDegeneracy("Perron vector has entries of both signs")
    return v / v.sum()


def max_real_eig(M) -> float:
    return float(np.linalg.eigvals(np.asarray(M, dtype=float)).real.max())


def is_nonsingular_m_matrix(V, margin: float = 1e-10) -> bool:
    V = np.asarray(V, dtype=float)
    off = V - np.diag(np.diag(V))
    if np.any(off > 0):
        return False
    return bool(np.linalg.eigvals(V).real.min() > margin)
