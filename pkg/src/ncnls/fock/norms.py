"""Weighted norms ||.||_{p,alpha}, the a-norm and a few standard Schatten norms."""
from __future__ import annotations

import math

import numpy as np

from .basis import weight_matrix
from .operators import FockOperator

__all__ = [
    "NormConvergenceError",
    "norm_p_alpha",
    "norm_a",
    "abs_matrix_norm",
    "op_norm",
    "trace_norm",
    "hs_norm",
]


SQUARE_EVERY = 8


class NormConvergenceError(ArithmeticError):
    pass


def _entries(phi):
    return phi.entries if isinstance(phi, FockOperator) else np.asarray(phi)


def norm_p_alpha(phi: FockOperator, p: float, alpha: float) -> float:
    """(sum b_{mn}^{alpha p} |phi_{mn}|^p)^{1/p}; sup b^alpha |phi_{mn}| for p = inf."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(phi.entries)
    w = weight_matrix(phi.d, phi.N, float(alpha)) if alpha else None
    if math.isinf(p):
        return float(np.max(a * w if w is not None else a, initial=0.0))
    if w is not None:
        a = a * w
    if p == 2:
        return float(np.sqrt(np.sum(a * a)))
    if p == 1:
        return float(np.sum(a))
    return float(np.sum(a**p) ** (1.0 / p))


def hs_norm(phi) -> float:
    return float(np.linalg.norm(_entries(phi)))


def op_norm(phi) -> float:
    return float(np.linalg.norm(_entries(phi), 2))


def trace_norm(phi) -> float:
    return float(np.sum(np.linalg.svd(_entries(phi), compute_uv=False)))


def abs_matrix_norm(a: np.ndarray, tol: float = 1e-10, max_iter: int | None = None) -> float:
    """Largest singular value of a non-negative matrix by power iteration on its Gram matrix.

    Stops once the eigen-residual ||G x - lam x|| <= tol * lam ||x||.
    """
    a = np.asarray(a, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(a):
        return 0.0
    rows, cols = a.shape
    if max_iter is None:
        max_iter = 10 * max(rows, cols)
    # diagonal matrices need no iteration
    if rows == cols and not np.any(a - np.diag(np.diag(a))):
        return float(np.max(np.diag(a)))
    gram = a.T @ a
    # iteration matrix; squared every SQUARE_EVERY steps to double the contraction rate
    it = gram / np.max(gram)
    x = np.ones(cols) / math.sqrt(cols)
    lam = 0.0
    for step in range(1, max(max_iter, 1) + 1):
        y = gram @ x
        lam = float(x @ y)
        if lam == 0.0:
            return 0.0
        if float(np.linalg.norm(y - lam * x)) <= tol * lam:
            return math.sqrt(lam)
        z = it @ x
        x = z / np.linalg.norm(z)
        if step % SQUARE_EVERY == 0:
            it = it @ it
            it /= np.max(it)
    raise NormConvergenceError(
        f"power iteration for the a-norm did not converge in {max_iter} steps (last estimate {math.sqrt(lam):.6g})"
    )


def norm_a(phi: FockOperator, tol: float = 1e-10) -> float:
    """Operator norm of the entrywise-absolute matrix (iteration cap 10 * N**d)."""
    return abs_matrix_norm(np.abs(phi.entries), tol=tol, max_iter=10 * phi.dim)
