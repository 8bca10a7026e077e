"""Randomised checks of the weighted-norm inequalities with explicit constants.

The constants are the ones the standard proofs produce:

* ||B_s||_op <= sum_{k in Z^d} (1+|k|)^s for s < -d
* ||phi||_a <= ||B_{-alpha}||_op ||phi||_{inf,alpha}
* ||phi||_{1,-alpha} <= ||B_{-alpha}||_op ||phi||_1 for phi >= 0
* ||phi psi||_{2,alpha} <= 2 c(alpha)^2 (||phi||_{2,alpha} ||psi||_a + ||phi||_a ||psi||_{2,alpha})
* ||phi psi||_{1,alpha} <= 2 c(2 alpha) ||B_{-alpha}||_op (||phi||_{2,2alpha} ||psi||_2 + ||phi||_2 ||psi||_{2,2alpha})

with c(alpha) = max(1, 2^(alpha-1)) from b_mn <= b_mk + b_kn and convexity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import zeta

from .basis import weight_matrix
from .norms import norm_a, norm_p_alpha
from .operators import FockOperator, random_operator

__all__ = [
    "c_const",
    "lattice_weight_sum",
    "b_operator_norm",
    "InequalityCheck",
    "NormInequalityReport",
    "verify_norm_inequalities",
]

REL_SLACK = 1e-9


def c_const(alpha: float) -> float:
    """c(alpha) with b_mn^alpha <= c(alpha) (b_mk^alpha + b_kn^alpha), alpha >= 0."""
    if alpha < 0:
        raise ValueError("c(alpha) defined for alpha >= 0")
    return max(1.0, 2.0 ** (alpha - 1.0))


def lattice_weight_sum(s: float, d: int, radius: int = 24) -> float:
    """Upper bound for sum over k in Z^d of (1+|k|)^s, s < -d (exact for d = 1)."""
    if s >= -d:
        raise ValueError(f"sum diverges unless s < -d (s={s}, d={d})")
    if d == 1:
        return 1.0 + 2.0 * float(zeta(-s, 2.0))
    grid = np.indices((2 * radius + 1,) * d).reshape(d, -1).T - radius
    box = float(np.sum((1.0 + np.linalg.norm(grid, axis=1)) ** s))
    # every lattice point outside the box owns a unit cube lying in |y| >= radius + 1/2,
    # on which (1+|k|)^s <= (1 + |y| - sqrt(d)/2)^s
    shell = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    shift = 1.0 - math.sqrt(d) / 2.0
    tail, _ = integrate.quad(lambda r: r ** (d - 1) * (r + shift) ** s, radius + 0.5, np.inf)
    return box + shell * tail


def general_trace_constant(b_norm: float) -> float:
    """Trace-norm constant for non-positive operators: two self-adjoint parts, each split in two."""
    return 2.0 * b_norm


def b_operator_norm(d: int, N: int, s: float) -> float:
    """Operator norm of the truncated matrix (b_mn^s)."""
    return float(np.linalg.eigvalsh(weight_matrix(d, N, s))[-1])


@dataclass
class InequalityCheck:
    name: str
    constant: float
    trials: int = 0
    worst_ratio: float = 0.0
    violations: list = field(default_factory=list)

    def record(self, trial: int, lhs: float, rhs_without_constant: float):
        self.trials += 1
        if rhs_without_constant > 0:
            self.worst_ratio = max(self.worst_ratio, lhs / rhs_without_constant)
        rhs = self.constant * rhs_without_constant
        if lhs > rhs * (1 + REL_SLACK) + 1e-300:
            self.violations.append({"trial": trial, "lhs": lhs, "rhs": rhs})

    @property
    def empirical_constant(self) -> float:
        """Smallest constant consistent with every trial seen."""
        return self.worst_ratio

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass
class NormInequalityReport:
    d: int
    N: int
    alpha: float
    seed: int
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def violations(self) -> list:
        return [dict(check=k, **v) for k, c in self.checks.items() for v in c.violations]

    def summary(self) -> dict:
        return {
            name: {
                "constant": c.constant,
                "trials": c.trials,
                "empirical_constant": c.empirical_constant,
                "violations": len(c.violations),
            }
            for name, c in self.checks.items()
        }


def _positive(d, N, rng, damping):
    a = random_operator(d, N, rng, damping=damping).entries
    return FockOperator(d, N, a @ a.conj().T)


def verify_norm_inequalities(trials: int, seed: int, alpha: float, N: int, d: int = 1,
                             damping: float | None = None, tol: float = 1e-12) -> NormInequalityReport:
    """Run every inequality on ``trials`` random operators; violations are reported, not raised."""
    if alpha <= d:
        raise ValueError(f"alpha must exceed d (alpha={alpha}, d={d})")
    rng = np.random.default_rng(seed)
    gamma = alpha if damping is None else damping

    lattice = lattice_weight_sum(-alpha, d)
    b_norm = b_operator_norm(d, N, -alpha)
    b_mat = weight_matrix(d, N, -alpha)

    checks = {
        "weight_operator_bound": InequalityCheck("weight_operator_bound", lattice),
        "weight_bilinear": InequalityCheck("weight_bilinear", lattice),
        "a_norm_vs_sup_weighted": InequalityCheck("a_norm_vs_sup_weighted", b_norm),
        "weighted_trace_positive": InequalityCheck("weighted_trace_positive", b_norm),
        "product_2alpha": InequalityCheck("product_2alpha", 2.0 * c_const(alpha) ** 2),
        "product_1alpha": InequalityCheck("product_1alpha", c_const(2.0 * alpha) * general_trace_constant(b_norm)),
        "a_norm_below_2alpha": InequalityCheck("a_norm_below_2alpha", 1.0),
        "a_norm_submultiplicative": InequalityCheck("a_norm_submultiplicative", 1.0),
    }
    checks["weight_operator_bound"].record(0, b_norm, 1.0)

    dim = N**d
    for i in range(trials):
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        checks["weight_bilinear"].record(
            i, abs(np.vdot(x, b_mat @ y)), float(np.linalg.norm(x) * np.linalg.norm(y))
        )

        phi = random_operator(d, N, rng, damping=gamma)
        psi = random_operator(d, N, rng, damping=gamma)
        a_phi = norm_a(phi, tol)
        a_psi = norm_a(psi, tol)

        checks["a_norm_vs_sup_weighted"].record(i, a_phi, norm_p_alpha(phi, math.inf, alpha))

        pos = _positive(d, N, rng, gamma)
        checks["weighted_trace_positive"].record(i, norm_p_alpha(pos, 1, -alpha), float(np.trace(pos.entries).real))

        prod = phi @ psi
        checks["product_2alpha"].record(
            i,
            norm_p_alpha(prod, 2, alpha),
            norm_p_alpha(phi, 2, alpha) * a_psi + a_phi * norm_p_alpha(psi, 2, alpha),
        )
        checks["product_1alpha"].record(
            i,
            norm_p_alpha(prod, 1, alpha),
            norm_p_alpha(phi, 2, 2 * alpha) * norm_p_alpha(psi, 2, 0)
            + norm_p_alpha(phi, 2, 0) * norm_p_alpha(psi, 2, 2 * alpha),
        )
        checks["a_norm_below_2alpha"].record(i, a_phi, norm_p_alpha(phi, 2, alpha))
        checks["a_norm_submultiplicative"].record(i, norm_a(prod, tol), a_phi * a_psi)

    return NormInequalityReport(d=d, N=N, alpha=alpha, seed=seed, checks=checks)
