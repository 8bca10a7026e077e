"""Block tables of e^{-it Delta} and their application to operators.

The constraint m + k = n + l splits the propagator into independent blocks,
one per offset j = n - m (which it preserves). Block |j| is indexed by the
smaller index of each pair:

    U^{(r)}[a, b] = (e^{-it Delta})_{a+r a, b+r b},

and the block for -r coincides with the one for +r. Blocks are complex
symmetric, so only the lower triangle is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .._parallel import parallel_map
from ..fock import FockOperator
from .elements import free_element_closed, free_elements_closed_float, free_elements_jacobi

__all__ = [
    "PropagatorTable",
    "build_blocks",
    "apply_free",
    "apply_free_array",
    "cached_blocks",
    "populated_offsets",
    "free_elements",
    "CLOSED_FORM_CROSSOVER",
    "MAX_CUTOFF",
    "ResourceLimitError",
    "save_table",
    "load_table",
]

# below this |t| the float binomial sum is used; above it the Jacobi recurrence
CLOSED_FORM_CROSSOVER = 0.01
# the Jacobi values reach ~4^N before rescaling; 384 keeps them far from overflow
MAX_CUTOFF = 384


class ResourceLimitError(RuntimeError):
    pass


def free_elements(n, m, k, l, t: float, method: str = "auto") -> np.ndarray:
    """Vectorised element evaluation; ``method`` in {auto, jacobi, closed, exact}."""
    t = float(t)
    if method == "exact":
        n, m, k, l = np.broadcast_arrays(*(np.asarray(x) for x in (n, m, k, l)))
        flat = [free_element_closed(*map(int, x), t) for x in zip(n.ravel(), m.ravel(), k.ravel(), l.ravel())]
        return np.array(flat, complex).reshape(n.shape)
    if method == "closed" or (method == "auto" and abs(t) < CLOSED_FORM_CROSSOVER):
        return free_elements_closed_float(n, m, k, l, t)
    if method in ("jacobi", "auto"):
        return free_elements_jacobi(n, m, k, l, t)
    raise ValueError(f"unknown method {method!r}")


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    """Blocks of e^{-it Delta} (d = 1 factor) for offsets |j| < N."""

    t: float
    N: int
    blocks: Mapping[int, np.ndarray] = field(repr=False)

    def __post_init__(self):
        frozen = {}
        for r, blk in self.blocks.items():
            size = self.N - r
            if not 0 <= r < self.N or blk.shape != (size, size):
                raise ValueError(f"block {r} has shape {blk.shape}, expected {(size, size)}")
            frozen[int(r)] = _frozen(np.asarray(blk, complex))
        object.__setattr__(self, "blocks", MappingProxyType(frozen))

    @property
    def offsets(self) -> tuple:
        return tuple(sorted(self.blocks))

    def block(self, j: int) -> np.ndarray:
        r = abs(int(j))
        if r not in self.blocks:
            raise KeyError(f"offset {j} not in table (have |j| in {self.offsets})")
        return self.blocks[r]

    def element(self, n: int, m: int, k: int, l: int) -> complex:
        """Table lookup of (e^{-it Delta})_{nm,kl}; zero off the conservation constraint."""
        if n - m != k - l:
            return 0j
        r = n - m
        a, b = (m, l) if r >= 0 else (n, k)
        return complex(self.block(r)[a, b])

    def conj(self) -> "PropagatorTable":
        """Table at -t."""
        return PropagatorTable(-self.t, self.N, {r: b.conj() for r, b in self.blocks.items()})

    def compose(self, other: "PropagatorTable") -> "PropagatorTable":
        """Blockwise product, the truncated analogue of U(t1) U(t2)."""
        if other.N != self.N:
            raise ValueError("cutoff mismatch")
        common = set(self.blocks) & set(other.blocks)
        return PropagatorTable(self.t + other.t, self.N, {r: self.blocks[r] @ other.blocks[r] for r in common})


def _block_values(r: int, N: int, t: float, method: str) -> np.ndarray:
    size = N - r
    a, b = np.tril_indices(size)
    vals = free_elements(a + r, a, b + r, b, t, method)
    blk = np.zeros((size, size), complex)
    blk[a, b] = vals
    blk[b, a] = vals
    return blk


def build_blocks(t: float, N: int, offsets: Iterable[int] | None = None, method: str = "auto",
                 max_cutoff: int = MAX_CUTOFF, workers: int | None = None) -> PropagatorTable:
    """Assemble the blocks at time t; ``offsets`` restricts to the listed |j| (all by default)."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > max_cutoff:
        raise ResourceLimitError(f"cutoff N={N} exceeds the configured maximum {max_cutoff}")
    rs = sorted({abs(int(j)) for j in offsets}) if offsets is not None else list(range(N))
    if any(r >= N for r in rs):
        raise ValueError(f"offsets must satisfy |j| < N={N}")
    if t == 0.0:
        return PropagatorTable(0.0, N, {r: np.eye(N - r, dtype=complex) for r in rs})
    # elements at -t are conjugates of those at t
    vals = parallel_map(lambda r: _block_values(r, N, abs(t), method), rs, workers)
    if t < 0:
        vals = [v.conj() for v in vals]
    return PropagatorTable(t, N, dict(zip(rs, vals)))


def _apply_axis(table: PropagatorTable, x: np.ndarray) -> np.ndarray:
    """Apply the d = 1 propagator to the last two axes (n, m) of x."""
    N = table.N
    out = np.zeros_like(x, dtype=complex)
    pattern = np.any(x != 0, axis=tuple(range(x.ndim - 2)))
    rows_nz, cols_nz = np.nonzero(pattern)
    for j in np.unique(rows_nz - cols_nz):
        rows, cols = _offset_indices(N, int(j))
        out[..., rows, cols] = x[..., rows, cols] @ table.block(j).T
    return out


@lru_cache(maxsize=4096)
def _offset_indices(N: int, j: int):
    """(rows, cols) of the entries with n - m = j, ordered by the smaller index."""
    r = abs(j)
    small = np.arange(N - r)
    return (small + r, small) if j >= 0 else (small, small + r)


def populated_offsets(entries: np.ndarray, d: int, N: int) -> tuple:
    """Sorted |n_i - m_i| values carrying nonzero entries, over all axes i."""
    x = entries.reshape((N,) * (2 * d)) != 0
    found: set = set()
    for ax in range(d):
        other = tuple(k for k in range(2 * d) if k not in (ax, d + ax))
        pat = np.any(x, axis=other) if other else x
        rows, cols = np.nonzero(pat)
        found.update(np.abs(rows - cols).tolist())
    return tuple(sorted(found))


def apply_free_array(table: PropagatorTable, entries: np.ndarray, d: int) -> np.ndarray:
    """apply_free on a raw (N^d, N^d) entries array; no validation or copying of the input."""
    N = table.N
    if table.t == 0.0:
        return entries
    x = entries.reshape((N,) * (2 * d))
    for ax in range(d):
        moved = np.moveaxis(x, (ax, d + ax), (-2, -1))
        x = np.moveaxis(_apply_axis(table, moved), (-2, -1), (ax, d + ax))
    return x.reshape(N**d, N**d)


def apply_free(table: PropagatorTable, phi: FockOperator) -> FockOperator:
    """e^{-it Delta} phi, offset by offset; d > 1 factorises into one d = 1 application per axis."""
    if table.N != phi.N:
        raise ValueError(f"table cutoff {table.N} does not match state cutoff {phi.N}")
    if table.t == 0.0:
        return phi
    return FockOperator(phi.d, phi.N, apply_free_array(table, phi.entries, phi.d))


@lru_cache(maxsize=256)
def _cached(t_key: float, N: int, offsets, method: str) -> PropagatorTable:
    return build_blocks(t_key, N, offsets=offsets, method=method)


def cached_blocks(t: float, N: int, offsets: Iterable[int] | None = None, method: str = "auto") -> PropagatorTable:
    """build_blocks memoised on (t rounded to 1e-14 relative, N, offsets, method)."""
    t_key = float(f"{float(t):.14e}")
    offs = None if offsets is None else tuple(sorted({abs(int(j)) for j in offsets}))
    if t_key < 0:
        return _cached(-t_key, N, offs, method).conj()
    return _cached(t_key, N, offs, method)


def save_table(path, table: PropagatorTable) -> Path:
    """Text cache: header ``t N``, then ``r a b re im`` for the lower triangle of each block."""
    lines = [f"{table.t:.17g} {table.N}"]
    for r in table.offsets:
        blk = table.blocks[r]
        a, b = np.tril_indices(blk.shape[0])
        for i, j, v in zip(a, b, blk[a, b]):
            lines.append(f"{r} {i} {j} {v.real:.17g} {v.imag:.17g}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_table(path) -> PropagatorTable:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    t, N = float(rows[0][0]), int(rows[0][1])
    blocks: dict = {}
    for r, a, b, re, im in rows[1:]:
        r, a, b = int(r), int(a), int(b)
        blk = blocks.setdefault(r, np.zeros((N - r, N - r), complex))
        blk[a, b] = blk[b, a] = complex(float(re), float(im))
    return PropagatorTable(t, N, blocks)
