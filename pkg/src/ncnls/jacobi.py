"""Jacobi polynomials P_l^{a,b}(X): evaluation, orthonormal scaling and uniform bounds.

Everything here is vectorised over numpy broadcasting of ``(l, a, b, x)`` so the
parameter sweeps run as a handful of array operations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

__all__ = [
    "JacobiParams",
    "jacobi_eval",
    "jacobi_explicit",
    "log_orthonormal_factor",
    "jacobi_orthonormal",
    "erdelyi_bound_check",
    "krasikov_bound_check",
    "log_bound_oracle",
    "log_bound_lhs",
    "KRASIKOV_MIN_PARAM",
]

KRASIKOV_MIN_PARAM = (1.0 + math.sqrt(2.0)) / 4.0


@dataclass(frozen=True)
class JacobiParams:
    degree: int
    alpha: float
    beta: float
    x: float

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError(f"degree must be a non-negative integer, got {self.degree}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not -1.0 <= self.x <= 1.0:
            raise ValueError(f"argument must lie in [-1, 1], got {self.x}")


def _recurrence(degree, alpha, beta, x):
    """Forward three-term recurrence; broadcasts over all four arguments."""
    degree, alpha, beta, x = np.broadcast_arrays(
        np.asarray(degree, dtype=np.int64),
        np.asarray(alpha, dtype=float),
        np.asarray(beta, dtype=float),
        np.asarray(x, dtype=float),
    )
    shape = degree.shape
    l = degree.ravel()
    a = alpha.ravel()
    b = beta.ravel()
    xx = x.ravel()
    out = np.ones(l.shape)
    if l.size == 0 or l.max() == 0:
        return out.reshape(shape)

    # Process elements in order of decreasing degree so that the active set at
    # step k is a prefix of the arrays.
    order = np.argsort(-l, kind="stable")
    l_s, a_s, b_s, x_s = l[order], a[order], b[order], xx[order]
    res = np.ones(l.shape)

    p_prev = np.ones(l.shape)
    p_cur = (a_s + 1.0) + (a_s + b_s + 2.0) * (x_s - 1.0) / 2.0
    res[l_s == 1] = p_cur[l_s == 1]
    top = int(l_s[0])
    counts = np.searchsorted(-l_s, -np.arange(top + 1), side="right")
    for k in range(2, top + 1):
        n_act = counts[k]
        ak, bk, xk = a_s[:n_act], b_s[:n_act], x_s[:n_act]
        s = 2.0 * k + ak + bk
        c1 = 2.0 * k * (k + ak + bk) * (s - 2.0)
        c2 = (s - 1.0) * (s * (s - 2.0) * xk + ak * ak - bk * bk)
        c3 = 2.0 * (k + ak - 1.0) * (k + bk - 1.0) * s
        p_next = (c2 * p_cur[:n_act] - c3 * p_prev[:n_act]) / c1
        p_prev = p_cur[:n_act]
        p_cur = p_next
        done = l_s[:n_act] == k
        res[:n_act][done] = p_cur[done]
    out[order] = res
    return out.reshape(shape)


def jacobi_eval(degree, alpha, beta, x):
    """Classical Jacobi polynomial with the standard normalisation P_l(1) = C(l+a, l).

    Uses the three-term recurrence in the degree. Accepts scalars or arrays.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0):
        raise ValueError("Jacobi argument outside [-1, 1]")
    if np.any(np.asarray(alpha) < 0) or np.any(np.asarray(beta) < 0):
        raise ValueError("alpha and beta must be non-negative")
    if np.any(np.asarray(degree) < 0):
        raise ValueError("degree must be non-negative")
    val = _recurrence(degree, alpha, beta, x)
    return float(val) if val.ndim == 0 else val


def jacobi_explicit(degree: int, alpha: int, beta: int, x: float) -> float:
    """Binomial double-sum form; exact binomials, used only as a cross-check for small l."""
    xm = (x - 1.0) / 2.0
    xp = (x + 1.0) / 2.0
    total = 0.0
    for j in range(degree + 1):
        total += (
            math.comb(degree + alpha, degree - j)
            * math.comb(degree + beta, j)
            * xm**j
            * xp ** (degree - j)
        )
    return total


def log_orthonormal_factor(degree, alpha, beta):
    """log of the factor turning P_l^{a,b} into the orthonormal polynomial for w = (1-X)^a (1+X)^b."""
    l = np.asarray(degree, dtype=float)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    return 0.5 * (
        np.log(2.0 * l + a + b + 1.0)
        - (a + b + 1.0) * math.log(2.0)
        + gammaln(l + a + b + 1.0)
        + gammaln(l + 1.0)
        - gammaln(l + a + 1.0)
        - gammaln(l + b + 1.0)
    )


def jacobi_orthonormal(degree, alpha, beta, x):
    """Orthonormal Jacobi polynomial; normalisation in log space so large l, a, b never overflow."""
    p = np.asarray(jacobi_eval(degree, alpha, beta, x))
    val = p * np.exp(log_orthonormal_factor(degree, alpha, beta))
    return float(val) if val.ndim == 0 else val


def _weighted_abs(degree, alpha, beta, x):
    """(1-X)^{a/2+1/4} (1+X)^{b/2+1/4} |P_l^{a,b}(X)| in the orthonormal scaling."""
    x = np.asarray(x, dtype=float)
    p = np.abs(np.asarray(jacobi_eval(degree, alpha, beta, x)))
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    with np.errstate(divide="ignore"):
        log_lhs = (
            (a / 2 + 0.25) * np.log1p(-x)
            + (b / 2 + 0.25) * np.log1p(x)
            + np.log(p)
            + log_orthonormal_factor(degree, alpha, beta)
        )
    return np.exp(log_lhs)


def _check_open_interval(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("bound checks need X strictly inside (-1, 1)")


def erdelyi_bound_check(degree, alpha, beta, x):
    """Uniform weighted bound sqrt(2e/pi) * sqrt(2 + sqrt(a^2 + b^2)).

    Returns ``(lhs, rhs, ok)``; arrays when any argument is an array.
    """
    _check_open_interval(x)
    if np.any(np.asarray(alpha) < -0.5) or np.any(np.asarray(beta) < -0.5):
        raise ValueError("bound valid only for alpha, beta >= -1/2")
    lhs = _weighted_abs(degree, alpha, beta, x)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    rhs = math.sqrt(2.0 * math.e / math.pi) * np.sqrt(2.0 + np.hypot(a, b))
    rhs = np.broadcast_to(rhs, np.shape(lhs))
    ok = lhs <= rhs
    if np.ndim(lhs) == 0:
        return float(lhs), float(rhs), bool(ok)
    return lhs, rhs, ok


def krasikov_bound_check(degree, alpha, beta, x):
    """Krasikov's sharper bound sqrt(3) a^{1/6} (1 + a/l)^{1/12}; only on its stated domain."""
    _check_open_interval(x)
    l = np.asarray(degree)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if np.any(l < 6):
        raise ValueError("Krasikov bound requires degree >= 6")
    if np.any(a < b) or np.any(b < KRASIKOV_MIN_PARAM):
        raise ValueError("Krasikov bound requires alpha >= beta >= (1 + sqrt 2)/4")
    lhs = _weighted_abs(degree, alpha, beta, x)
    rhs = math.sqrt(3.0) * a ** (1.0 / 6.0) * (1.0 + a / l) ** (1.0 / 12.0)
    rhs = np.broadcast_to(rhs, np.shape(lhs))
    ok = lhs <= rhs
    if np.ndim(lhs) == 0:
        return float(lhs), float(rhs), bool(ok)
    return lhs, rhs, ok


def _log_integrand(phi, theta):
    return np.abs(np.sin((phi + theta) / 2.0) * np.sin((phi - theta) / 2.0)) ** -0.5


def log_bound_oracle(theta: float, epsabs: float = 1e-12, epsrel: float = 1e-10) -> float:
    """(1/2pi) * integral_0^pi |sin((p+theta)/2) sin((p-theta)/2)|^{-1/2} dp.

    The integrable singularity at p = theta is removed by p = theta -/+ u^2 on
    either side; the smooth remainders go to adaptive Gauss-Kronrod.
    """
    if not 0.0 < theta <= math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2]")

    def left(u):
        # p = theta - u^2; |sin((p - theta)/2)| = sin(u^2/2)
        p = theta - u * u
        s1 = math.sin((p + theta) / 2.0)
        if u == 0.0:
            return 2.0 * math.sqrt(2.0) / math.sqrt(s1)
        return 2.0 * u / math.sqrt(s1 * math.sin(u * u / 2.0))

    def right(u):
        p = theta + u * u
        s1 = math.sin((p + theta) / 2.0)
        if u == 0.0:
            return 2.0 * math.sqrt(2.0) / math.sqrt(s1)
        return 2.0 * u / math.sqrt(s1 * math.sin(u * u / 2.0))

    total = 0.0
    for fn, upper in ((left, math.sqrt(theta)), (right, math.sqrt(math.pi - theta))):
        # the left piece varies on the scale sqrt(theta) near u = sqrt(theta)
        val, err = integrate.quad(fn, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=500)
        if not np.isfinite(val) or err > max(epsabs, epsrel * abs(val)) * 100:
            raise ArithmeticError(f"quadrature did not converge at theta={theta} (err={err})")
        total += val
    return total / (2.0 * math.pi)


def log_bound_lhs(degree, alpha, beta, theta):
    """(sin theta/2)^a (cos theta/2)^b |P_l^{a,b}(cos theta)|, the quantity the oracle dominates."""
    theta = np.asarray(theta, dtype=float)
    p = np.abs(np.asarray(jacobi_eval(degree, alpha, beta, np.cos(theta))))
    return np.sin(theta / 2.0) ** np.asarray(alpha, float) * np.cos(theta / 2.0) ** np.asarray(beta, float) * p
