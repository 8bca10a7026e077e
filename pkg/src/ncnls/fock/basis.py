"""Multi-index bookkeeping for the truncated oscillator basis |n>, n in N_0^d."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["multi_indices", "flat_index", "b_weight", "weight_matrix", "WeightMatrix"]


@lru_cache(maxsize=32)
def _multi_indices(d: int, N: int) -> np.ndarray:
    grid = np.indices((N,) * d).reshape(d, -1).T
    grid.setflags(write=False)
    return grid


def multi_indices(d: int, N: int) -> np.ndarray:
    """All n in {0..N-1}^d in lexicographic order, shape (N**d, d)."""
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    return _multi_indices(d, N)


def flat_index(n, N: int) -> int:
    n = tuple(int(c) for c in np.atleast_1d(n))
    if any(c < 0 or c >= N for c in n):
        raise IndexError(f"multi-index {n} outside cutoff {N}")
    return int(np.ravel_multi_index(n, (N,) * len(n)))


def b_weight(m, n) -> float:
    """1 + |m - n| with the Euclidean norm on Z^d."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    n = np.atleast_1d(np.asarray(n, dtype=float))
    if m.shape != n.shape:
        raise ValueError(f"dimension mismatch: {m.shape} vs {n.shape}")
    return 1.0 + float(np.linalg.norm(m - n))


@lru_cache(maxsize=64)
def _base_weights(d: int, N: int) -> np.ndarray:
    idx = multi_indices(d, N).astype(float)
    diff = idx[:, None, :] - idx[None, :, :]
    b = 1.0 + np.sqrt(np.sum(diff * diff, axis=-1))
    b.setflags(write=False)
    return b


@lru_cache(maxsize=64)
def weight_matrix(d: int, N: int, alpha: float) -> np.ndarray:
    """Matrix of b_{mn}^alpha over flattened (n, m) pairs; symmetric, entries >= 1 for alpha >= 0."""
    w = _base_weights(d, N) ** float(alpha)
    w.setflags(write=False)
    return w


class WeightMatrix:
    """b^alpha on the (d, N) box, evaluated on first access."""

    def __init__(self, d: int, N: int, alpha: float):
        self.d, self.N, self.alpha = d, N, float(alpha)

    @property
    def entries(self) -> np.ndarray:
        return weight_matrix(self.d, self.N, self.alpha)

    def __call__(self, m, n) -> float:
        return b_weight(m, n) ** self.alpha
