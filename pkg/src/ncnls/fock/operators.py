"""Truncated Fock-basis operators.

Storage convention: ``entries[n, m] = <n|phi|m>`` over flattened multi-indices,
so operator composition is plain matrix multiplication.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import flat_index, multi_indices, weight_matrix

__all__ = [
    "FockOperator",
    "DiagonalOperator",
    "InteractionPolynomial",
    "algebra",
    "apply_polynomial",
    "random_operator",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FockOperator:
    d: int
    N: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise ValueError("need d >= 1 and N >= 1")
        dim = self.N**self.d
        ent = np.asarray(self.entries)
        if ent.shape != (dim, dim):
            raise ValueError(f"entries must have shape {(dim, dim)}, got {ent.shape}")
        if not np.all(np.isfinite(ent)):
            raise ValueError("non-finite operator entries")
        object.__setattr__(self, "entries", _frozen(ent))

    @property
    def dim(self) -> int:
        return self.N**self.d

    @classmethod
    def zeros(cls, d: int, N: int) -> "FockOperator":
        return cls(d, N, np.zeros((N**d, N**d), complex))

    @classmethod
    def identity(cls, d: int, N: int) -> "FockOperator":
        return cls(d, N, np.eye(N**d, dtype=complex))

    @classmethod
    def ket_bra(cls, n, m, N: int, coeff: complex = 1.0) -> "FockOperator":
        """coeff * |n><m|."""
        n = np.atleast_1d(n)
        m = np.atleast_1d(m)
        d = len(n)
        ent = np.zeros((N**d, N**d), complex)
        ent[flat_index(n, N), flat_index(m, N)] = coeff
        return cls(d, N, ent)

    def element(self, n, m) -> complex:
        """<n|phi|m>, i.e. the coefficient phi_{mn} of |n><m|."""
        return complex(self.entries[flat_index(n, self.N), flat_index(m, self.N)])

    def _check(self, other: "FockOperator"):
        if (self.d, self.N) != (other.d, other.N):
            raise ValueError(f"shape mismatch: (d={self.d}, N={self.N}) vs (d={other.d}, N={other.N})")

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.d, self.N, self.entries.conj().T)

    def __add__(self, other):
        self._check(other)
        return FockOperator(self.d, self.N, self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return FockOperator(self.d, self.N, self.entries - other.entries)

    def __neg__(self):
        return FockOperator(self.d, self.N, -self.entries)

    def __mul__(self, scalar):
        return FockOperator(self.d, self.N, self.entries * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return FockOperator(self.d, self.N, self.entries @ other.entries)

    def is_diagonal(self) -> bool:
        e = self.entries
        return not np.any(e - np.diag(np.diag(e)))

    def to_tensor(self) -> np.ndarray:
        """View with axes (n_1..n_d, m_1..m_d)."""
        return self.entries.reshape((self.N,) * (2 * self.d))


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    d: int
    N: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.N**self.d,):
            raise ValueError(f"values must have shape {(self.N**self.d,)}, got {vals.shape}")
        object.__setattr__(self, "values", _frozen(vals))

    def to_operator(self) -> FockOperator:
        return FockOperator(self.d, self.N, np.diag(self.values))

    @classmethod
    def from_operator(cls, phi: FockOperator) -> "DiagonalOperator":
        if not phi.is_diagonal():
            raise ValueError("operator has off-diagonal entries")
        return cls(phi.d, phi.N, np.diag(phi.entries))

    @classmethod
    def zeros(cls, d: int, N: int) -> "DiagonalOperator":
        return cls(d, N, np.zeros(N**d, complex))


class InteractionPolynomial:
    """Real polynomial F(x) = sum_{p>=1} c_p x^p without constant term.

    ``coefficients[0]`` is c_1.
    """

    def __init__(self, coefficients: Sequence[float]):
        c = np.asarray(coefficients, dtype=float).ravel()
        # trailing zeros carry no information
        nz = np.flatnonzero(c)
        self.coefficients = c[: nz[-1] + 1] if nz.size else np.zeros(0)
        self.coefficients.setflags(write=False)

    @classmethod
    def from_string(cls, text: str) -> "InteractionPolynomial":
        parts = [p for p in text.replace(",", " ").split() if p]
        return cls([float(p) for p in parts])

    def __repr__(self):
        return f"InteractionPolynomial({list(self.coefficients)})"

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def is_zero(self) -> bool:
        return self.degree == 0

    @property
    def lowest_degree(self) -> int:
        """Smallest p with c_p != 0 (0 for the zero polynomial)."""
        nz = np.flatnonzero(self.coefficients)
        return int(nz[0]) + 1 if nz.size else 0

    def __call__(self, x):
        x = np.asarray(x)
        acc = np.zeros_like(x, dtype=np.result_type(x, float))
        for c in self.coefficients[::-1]:
            acc = (acc + c) * x
        return acc

    def derivative(self):
        """Coefficients of F' as a plain callable (F' can have a constant term)."""
        c = self.coefficients
        powers = np.arange(1, len(c) + 1)
        dc = c * powers  # dc[j] multiplies x^j

        def fprime(x):
            x = np.asarray(x, dtype=float)
            acc = np.zeros_like(x)
            for coef in dc[::-1]:
                acc = acc * x + coef
            return acc

        return fprime

    def antiderivative(self):
        """G with G(0) = 0 and G' = F."""
        c = self.coefficients
        gc = c / np.arange(2, len(c) + 2)  # gc[j] multiplies x^{j+2}

        def G(x):
            x = np.asarray(x, dtype=float)
            acc = np.zeros_like(x)
            for coef in gc[::-1]:
                acc = (acc + coef) * x
            return acc * x

        return G

    def on_matrix(self, h: np.ndarray) -> np.ndarray:
        """F(h) for a square matrix by Horner's rule (no constant term)."""
        acc = np.zeros_like(h, dtype=complex)
        if self.is_zero:
            return acc
        for c in self.coefficients[::-1]:
            acc = acc + c * np.eye(h.shape[0])
            acc = acc @ h
        return acc


def algebra(phi: FockOperator, psi: FockOperator | None, kind: str) -> FockOperator:
    """multiply / add / adjoint / abs_square in the stored convention."""
    if kind == "multiply":
        return phi @ psi
    if kind == "add":
        return phi + psi
    if kind == "adjoint":
        return phi.adjoint()
    if kind == "abs_square":
        return phi.adjoint() @ phi
    raise ValueError(f"unknown algebra operation {kind!r}")


def apply_polynomial(phi: FockOperator, F: InteractionPolynomial, theta: float) -> FockOperator:
    """theta * phi F(phi* phi)."""
    e = phi.entries
    h = e.conj().T @ e
    return FockOperator(phi.d, phi.N, theta * (e @ F.on_matrix(h)))


def random_operator(d: int, N: int, rng: np.random.Generator, damping: float = 0.0,
                    scale: float = 1.0) -> FockOperator:
    """i.i.d. complex Gaussian entries times b^{-damping}."""
    dim = N**d
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    if damping:
        z = z * weight_matrix(d, N, -float(damping))
    return FockOperator(d, N, scale * z)


def support_radius(phi: FockOperator, floor: float = 1e-12) -> int:
    """Largest single-axis index carrying an entry above ``floor`` (-1 if none)."""
    idx = multi_indices(phi.d, phi.N)
    big = np.abs(phi.entries) > floor
    rows, cols = np.nonzero(big)
    if rows.size == 0:
        return -1
    return int(max(idx[rows].max(), idx[cols].max()))
