"""Plain-text operator snapshots.

Header ``d N``, then one line per nonzero entry::

    n_1 .. n_d m_1 .. m_d re im

where the entry is <n|phi|m>. Omitted entries read back as zero.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .basis import multi_indices
from .operators import FockOperator

__all__ = ["write_snapshot", "read_snapshot", "format_snapshot", "parse_snapshot"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_snapshot(phi: FockOperator, floor: float = 0.0) -> str:
    idx = multi_indices(phi.d, phi.N)
    lines = [f"{phi.d} {phi.N}"]
    ent = phi.entries
    rows, cols = np.nonzero(np.abs(ent) > floor)
    for r, c in zip(rows, cols):
        v = ent[r, c]
        lab = " ".join(str(int(x)) for x in (*idx[r], *idx[c]))
        lines.append(f"{lab} {_fmt(v.real)} {_fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> FockOperator:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty snapshot")
    d, N = (int(x) for x in lines[0].split())
    ent = np.zeros((N**d, N**d), complex)
    shape = (N,) * d
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2 * d + 2:
            raise ValueError(f"malformed snapshot line: {ln!r}")
        n = tuple(int(x) for x in parts[:d])
        m = tuple(int(x) for x in parts[d : 2 * d])
        ent[np.ravel_multi_index(n, shape), np.ravel_multi_index(m, shape)] = complex(
            float(parts[2 * d]), float(parts[2 * d + 1])
        )
    return FockOperator(d, N, ent)


def write_snapshot(path, phi: FockOperator) -> Path:
    path = Path(path)
    path.write_text(format_snapshot(phi))
    return path


def read_snapshot(path) -> FockOperator:
    return parse_snapshot(Path(path).read_text())
