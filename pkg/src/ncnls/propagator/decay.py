"""Dispersive-decay diagnostics: sup of |element| over index families as a function of t."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .elements import free_element_closed
from .table import build_blocks

__all__ = ["DecayCurve", "decay_curve", "DECAY_MODES"]

DECAY_MODES = ("sup_all", "diagonal_only", "fixed")


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    values: np.ndarray
    mode: str = "sup_all"
    d: int = 1
    N: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def fit_slope(self) -> tuple[float, float]:
        """Least-squares (slope, log-intercept) of log value against log t."""
        slope, icpt = np.polyfit(np.log(self.times), np.log(self.values), 1)
        return float(slope), float(icpt)

    def envelope_constant(self, exponent: float) -> float:
        """Smallest C with value <= C t^exponent on the grid."""
        return float(np.max(self.values * self.times ** (-exponent)))

    def log_envelope_constant(self) -> float:
        """Smallest C with value <= C t^-d (1 + log t)^d on the grid."""
        t = self.times
        return float(np.max(self.values * t**self.d / (1.0 + np.log(t)) ** self.d))

    def to_csv(self, path, header: str = "") -> Path:
        path = Path(path)
        lines = ([f"# {header}"] if header else []) + [f"# mode={self.mode} d={self.d} N={self.N}", "t,value"]
        lines += [f"{t:.17g},{v:.17g}" for t, v in zip(self.times, self.values)]
        path.write_text("\n".join(lines) + "\n")
        return path


def _axis_value(mode: str, t: float, N: int, fixed) -> float:
    if mode == "sup_all":
        table = build_blocks(t, N)
        return max(float(np.max(np.abs(b))) for b in table.blocks.values())
    if mode == "diagonal_only":
        return float(np.max(np.abs(build_blocks(t, N, offsets=[0]).block(0))))
    raise ValueError(mode)


def decay_curve(mode: str, t_grid: Sequence[float], N: int, d: int = 1, fixed=None) -> DecayCurve:
    """Per-time sup of |(e^{-it Delta})_{nm,kl}| over the index family, indices < N.

    Elements factorise over axes, so for d > 1 the sups are d-th powers of the
    d = 1 sups and a fixed multi-index element is a product of d = 1 elements.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.size == 0:
        raise ValueError("empty time grid")
    if np.any(times < 1.0):
        raise ValueError("decay curves are defined for t >= 1")
    if mode not in DECAY_MODES:
        raise ValueError(f"mode must be one of {DECAY_MODES}, got {mode!r}")
    values = []
    for t in times:
        if mode == "fixed":
            if fixed is None:
                raise ValueError("mode 'fixed' needs the index tuple (n, m, k, l)")
            n, m, k, l = (np.broadcast_to(np.atleast_1d(x), (d,)) for x in fixed)
            values.append(math.prod(abs(free_element_closed(*map(int, idx), t)) for idx in zip(n, m, k, l)))
        else:
            values.append(_axis_value(mode, t, N, fixed) ** d)
    return DecayCurve(times, np.array(values), mode=mode, d=d, N=N)
