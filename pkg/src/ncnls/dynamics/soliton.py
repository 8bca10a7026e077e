"""Oscillating solutions phi(t) = exp(-i omega t) phi0 with phi0 self-adjoint and diagonal.

phi0 = diag(x) solves L x + theta V'(x) = 0 with
V'(x) = x F(x^2) - (F(x0) + eps) x, where x0 is the positive local minimum of F,
and then omega = theta (F(x0) + eps). The search is a damped Newton iteration
seeded by a single plateau at the largest positive zero of V'.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fock import DiagonalOperator, FockOperator, InteractionPolynomial
from ..fock.basis import multi_indices

__all__ = [
    "InadmissibleInteraction",
    "NewtonStagnation",
    "SolitonResult",
    "admissible_minimum",
    "diagonal_generator",
    "soliton_find",
    "soliton_seed",
    "theta_threshold",
    "MAX_HALVINGS",
]

MAX_HALVINGS = 60
EPS_FRACTION = 0.01


class InadmissibleInteraction(ValueError):
    """F violates a named admissibility criterion."""

    def __init__(self, criterion: str, detail: str = ""):
        self.criterion = criterion
        super().__init__(f"interaction rejected: {criterion}" + (f" ({detail})" if detail else ""))


class NewtonStagnation(ArithmeticError):
    def __init__(self, best_residual: float, iterations: int, best=None):
        self.best_residual = best_residual
        self.iterations = iterations
        self.best = best
        super().__init__(f"Newton stagnated after {iterations} iterations, best residual {best_residual:.3e}")


@dataclass(frozen=True)
class SolitonResult:
    phi0: FockOperator
    omega: float
    residual: float
    theta: float
    epsilon: float
    x0: float
    iterations: int = 0
    trivial: bool = False

    @property
    def l1_norm(self) -> float:
        """Trace norm of phi0, finite for members of the diagonal scattering space."""
        return float(np.sum(np.abs(np.diag(self.phi0.entries))))

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(np.diag(self.phi0.entries))))


def admissible_minimum(F: InteractionPolynomial) -> float:
    """x0 > 0, the unique positive local minimum of F with F(x0) < F(0); raises otherwise."""
    c = F.coefficients
    if F.is_zero or c[-1] <= 0:
        raise InadmissibleInteraction("positive leading coefficient", f"coefficients {list(c)}")
    # F'(x) = sum p c_p x^(p-1); numpy.roots wants the highest power first
    dcoef = (c * np.arange(1, len(c) + 1))[::-1]
    crit = np.roots(dcoef) if len(dcoef) > 1 else np.array([])
    crit = np.sort(crit[(np.abs(crit.imag) < 1e-12) & (crit.real > 0)].real)
    fprime = F.derivative()
    minima = []
    for x in crit:
        h = 1e-6 * max(1.0, x)
        if fprime(x - h) < 0 < fprime(x + h):
            minima.append(float(x))
    if len(minima) != 1:
        raise InadmissibleInteraction(
            "unique local minimum on the positive real line", f"found {len(minima)} positive local minima"
        )
    x0 = minima[0]
    if not F(x0) < 0.0:
        raise InadmissibleInteraction("F(x0) < F(0)", f"F({x0:g}) = {float(F(x0)):g}")
    return x0


def diagonal_generator(d: int, N: int) -> np.ndarray:
    """Matrix of the free generator on diagonal operators, truncated to the (d, N) box.

    Per axis (L x)_n = (2n+1) x_n - n x_{n-1} - (n+1) x_{n+1}; axes add.
    """
    n = np.arange(N, dtype=float)
    one = np.diag(2 * n + 1) - np.diag(n[1:], -1) - np.diag(n[1:], 1)
    eye = np.eye(N)
    total = np.zeros((N**d, N**d))
    for ax in range(d):
        term = np.ones((1, 1))
        for k in range(d):
            term = np.kron(term, one if k == ax else eye)
        total += term
    return total


def _potential_derivs(F: InteractionPolynomial, shift: float):
    fp = F.derivative()

    def v1(x):
        return x * F(x * x) - shift * x

    def v2(x):
        y = x * x
        return F(y) + 2 * y * fp(y) - shift

    return v1, v2


def _plateau_level(F: InteractionPolynomial, shift: float) -> float:
    """Largest positive zero of V', i.e. sqrt of the largest positive root of F(y) = shift."""
    c = F.coefficients
    poly = np.concatenate([c[::-1], [-shift]])
    roots = np.roots(poly)
    roots = roots[(np.abs(roots.imag) < 1e-10) & (roots.real > 0)].real
    if roots.size == 0:
        raise InadmissibleInteraction("F(y) = F(x0) + eps has a positive root", f"shift {shift:g}")
    return float(np.sqrt(roots.max()))


def soliton_seed(F: InteractionPolynomial, N: int, d: int = 1, width: int = 4,
                 epsilon: float | None = None) -> DiagonalOperator:
    """Single plateau at the largest zero of V' on indices with max-coordinate < width."""
    x0 = admissible_minimum(F)
    eps = EPS_FRACTION * abs(float(F(x0))) if epsilon is None else epsilon
    level = _plateau_level(F, float(F(x0)) + eps)
    idx = multi_indices(d, N)
    return DiagonalOperator(d, N, np.where(np.max(idx, axis=1) < width, level, 0.0))


def soliton_find(F: InteractionPolynomial, theta: float, epsilon: float | None = None, N: int = 64,
                 init: DiagonalOperator | None = None, d: int = 1, tol: float = 1e-8,
                 max_iter: int = 100) -> SolitonResult:
    """Damped Newton on R(x) = L x + theta V'(x) over real diagonal x."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    x0 = admissible_minimum(F)
    eps = EPS_FRACTION * abs(float(F(x0))) if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    shift = float(F(x0)) + eps
    omega = theta * shift
    if init is None:
        init = soliton_seed(F, N, d, epsilon=eps)
    if (init.d, init.N) != (d, N):
        raise ValueError("init does not match (d, N)")
    x = np.asarray(init.values).real.astype(float)

    L = diagonal_generator(d, N)
    v1, v2 = _potential_derivs(F, shift)

    def resid(y):
        return L @ y + theta * v1(y)

    r = resid(x)
    rn = float(np.linalg.norm(r))

    def result(y, res, it):
        trivial = not np.any(y)
        return SolitonResult(
            phi0=FockOperator(d, N, np.diag(y.astype(complex))), omega=omega, residual=res,
            theta=theta, epsilon=eps, x0=x0, iterations=it, trivial=trivial,
        )

    for it in range(max_iter):
        if rn <= tol:
            return result(x, rn, it)
        J = L + theta * np.diag(v2(x))
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise NewtonStagnation(rn, it, result(x, rn, it)) from None
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = x - lam * step
            tr = resid(trial)
            tn = float(np.linalg.norm(tr))
            if tn < rn:
                break
            lam *= 0.5
        else:
            raise NewtonStagnation(rn, it, result(x, rn, it))
        x, r, rn = trial, tr, tn
    if rn <= tol:
        return result(x, rn, max_iter)
    raise NewtonStagnation(rn, max_iter, result(x, rn, max_iter))


def _nontrivial_success(F, theta, N, d, tol, epsilon) -> SolitonResult | None:
    try:
        res = soliton_find(F, theta, epsilon=epsilon, N=N, d=d, tol=tol)
    except NewtonStagnation:
        return None
    seed_level = float(np.max(soliton_seed(F, N, d, epsilon=res.epsilon).values.real))
    return res if res.amplitude >= 0.5 * seed_level else None


def theta_threshold(F: InteractionPolynomial, N: int = 64, d: int = 1, tol: float = 1e-8,
                    epsilon: float | None = None, start: float = 1.0, max_theta: float = 1e6,
                    rel_width: float = 0.05) -> float:
    """Smallest theta (to ``rel_width``) at which Newton from the default seed finds a nontrivial soliton.

    Doubling until success, then bisection on the bracket.
    """
    hi = start
    while _nontrivial_success(F, hi, N, d, tol, epsilon) is None:
        hi *= 2.0
        if hi > max_theta:
            raise NewtonStagnation(float("nan"), 0)
    lo = hi / 2.0
    if hi == start:
        return hi
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if _nontrivial_success(F, mid, N, d, tol, epsilon) is None:
            lo = mid
        else:
            hi = mid
    return hi
