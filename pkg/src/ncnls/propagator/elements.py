"""Single matrix elements of the free group e^{-it Delta} and the heat semigroup e^{-t Delta}, d = 1.

Two independent evaluations of the unitary element are provided:

* ``free_element_closed`` sums the finite binomial series exactly in integer
  arithmetic (t is a binary float, hence a rational p/q), so the alternating
  sum has no cancellation error at all;
* ``free_element_jacobi`` evaluates the same element through a Jacobi
  polynomial in X = (t^2 - 1)/(t^2 + 1) with the three-term recurrence,
  reducing the indices with the symmetries (nm,kl) = (kl,nm) = (mn,lk).

Both assemble modulus and phase separately (log-gamma prefactors, integer
powers of 1 + it as modulus/argument), so indices in the hundreds never overflow.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from ..jacobi import jacobi_eval

__all__ = [
    "free_element_closed",
    "free_element_jacobi",
    "free_elements_jacobi",
    "free_elements_closed_float",
    "heat_element",
    "heat_elements",
    "canonical_indices",
    "admissible",
]


_I_POWERS = (1, 1j, -1, -1j)


def _check_indices(*idx):
    for i in idx:
        if int(i) != i or i < 0:
            raise ValueError(f"indices must be non-negative integers, got {idx}")


def admissible(n: int, m: int, k: int, l: int) -> bool:
    """The conservation constraint m + k = n + l."""
    return m + k == n + l


def _log_fact(x: int) -> float:
    return math.lgamma(x + 1)


def _ilog(x: int) -> float:
    """log of a positive (possibly huge) integer."""
    return math.log(x)


def free_element_closed(n: int, m: int, k: int, l: int, t: float, flip_term: int | None = None) -> complex:
    """(e^{-it Delta})_{nm,kl} from the finite binomial sum, summed exactly.

    sqrt(C(n,m-v) C(k,l-v) C(m,m-v) C(l,l-v)) = sqrt(n! k! m! l!) / ((m-v)! (l-v)! (n-m+v)! v!),
    so after clearing the denominators every term is an integer.
    ``flip_term`` negates the v-th coefficient; it exists for mutation tests of the oracles.
    """
    _check_indices(n, m, k, l)
    if not admissible(n, m, k, l):
        return 0j
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    frac = Fraction(t)
    p, q = frac.numerator, frac.denominator
    v_lo = max(0, m - n)
    v_hi = min(m, l)
    if v_lo > v_hi:
        return 0j
    r = n - m
    # common multiple of every (m-v)! (l-v)! (n-m+v)! v! over the summation range
    big = math.factorial(m) * math.factorial(l) * math.factorial(r + v_hi) * math.factorial(v_hi)
    total = 0
    for v in range(v_lo, v_hi + 1):
        e = m + l - 2 * v
        if p == 0 and e > 0:
            continue
        denom = math.factorial(m - v) * math.factorial(l - v) * math.factorial(r + v) * math.factorial(v)
        term = (big // denom) * p**e * q ** (2 * v)
        if v == flip_term:
            term = -term
        total += -term if v % 2 else term
    if total == 0:
        return 0j
    log_mod = (
        0.5 * (_log_fact(n) + _log_fact(k) + _log_fact(m) + _log_fact(l))
        + _ilog(abs(total))
        - _ilog(big)
        - (m + l) * _ilog(q)
        - 0.5 * (m + k + 1) * math.log1p(t * t)
    )
    # i^{m+l} exactly, so t = 0 gives exact 0/1 entries
    unit = _I_POWERS[(m + l) % 4] * (-1 if total < 0 else 1)
    return unit * complex(np.exp(log_mod - 1j * (m + k + 1) * math.atan(t)))


def canonical_indices(n, m, k, l):
    """Map (n,m,k,l) to an equivalent tuple with n >= m and l <= m (arrays allowed).

    Uses (nm,kl) -> (mn,lk) when n < m, then (nm,kl) -> (kl,nm) when l > m.
    """
    n, m, k, l = (np.asarray(x, dtype=np.int64) for x in (n, m, k, l))
    sw = n < m
    n, m, k, l = np.where(sw, m, n), np.where(sw, n, m), np.where(sw, l, k), np.where(sw, k, l)
    sw = l > m
    n, m, k, l = np.where(sw, k, n), np.where(sw, l, m), np.where(sw, n, k), np.where(sw, m, l)
    return n, m, k, l


def _polar_prefactor(n, m, k, l, t):
    """log-modulus and phase of sqrt(n!l!/(m!k!)) (it)^{m+l} (1+it)^{-(m+k+1)} (1+t^-2)^l."""
    n, m, k, l = (np.asarray(x, dtype=float) for x in (n, m, k, l))
    log_mod = (
        0.5 * (gammaln(n + 1) + gammaln(l + 1) - gammaln(m + 1) - gammaln(k + 1))
        + (m - l) * math.log(abs(t))
        + (l - 0.5 * (m + k + 1)) * math.log1p(t * t)
    )
    phase = (m + l) * (math.pi / 2) * math.copysign(1.0, t) - (m + k + 1) * math.atan(t)
    return log_mod, phase


def free_elements_jacobi(n, m, k, l, t: float) -> np.ndarray:
    """Vectorised Jacobi evaluation over index arrays; inadmissible tuples give 0."""
    t = float(t)
    if t == 0.0 or not math.isfinite(t):
        raise ValueError("the Jacobi form needs finite t != 0; use free_element_closed at t = 0")
    n, m, k, l = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (n, m, k, l)))
    if np.any((n < 0) | (m < 0) | (k < 0) | (l < 0)):
        raise ValueError("indices must be non-negative")
    ok = (m + k) == (n + l)
    out = np.zeros(n.shape, complex)
    if not np.any(ok):
        return out
    cn, cm, ck, cl = canonical_indices(n[ok], m[ok], k[ok], l[ok])
    x = (t * t - 1.0) / (t * t + 1.0)
    p = np.asarray(jacobi_eval(cl, cn - cm, cm - cl, np.full(cl.shape, x)))
    log_mod, phase = _polar_prefactor(cn, cm, ck, cl, t)
    with np.errstate(divide="ignore"):
        log_mod = log_mod + np.log(np.abs(p))
    phase = phase + np.where(p < 0, math.pi, 0.0)
    out[ok] = np.exp(log_mod + 1j * phase)
    return out


def free_element_jacobi(n: int, m: int, k: int, l: int, t: float) -> complex:
    """(e^{-it Delta})_{nm,kl} through P_l^{n-m, m-l}((t^2-1)/(t^2+1)) after index reduction."""
    _check_indices(n, m, k, l)
    return complex(free_elements_jacobi(n, m, k, l, t))


def free_elements_closed_float(n, m, k, l, t: float) -> np.ndarray:
    """Floating-point binomial sum, vectorised; accurate only while the terms do not cancel (small |t|)."""
    t = float(t)
    n, m, k, l = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (n, m, k, l)))
    ok = (m + k) == (n + l)
    out = np.zeros(n.shape, complex)
    if not np.any(ok):
        return out
    n, m, k, l = (a[ok].astype(float) for a in (n, m, k, l))
    v_lo = np.maximum(0, m - n)
    v_hi = np.minimum(m, l)
    acc = np.zeros(n.shape)
    base = 0.5 * (gammaln(n + 1) + gammaln(k + 1) + gammaln(m + 1) + gammaln(l + 1))
    top = int(v_hi.max()) if v_hi.size else 0
    for v in range(top + 1):
        live = (v >= v_lo) & (v <= v_hi)
        if not np.any(live):
            continue
        e = m + l - 2 * v
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.where(e > 0, e * math.log(abs(t)) if t != 0 else -np.inf, 0.0)
            log_term = base - (
                gammaln(np.maximum(m - v, 0) + 1)
                + gammaln(np.maximum(l - v, 0) + 1)
                + gammaln(np.maximum(n - m + v, 0) + 1)
                + gammaln(v + 1.0)
            ) + lt
        sign = (-1.0) ** v * np.where((e % 2 == 1) & (t < 0), -1.0, 1.0)
        acc += np.where(live, sign * np.exp(log_term), 0.0)
    # remaining factor i^{m+l} (1+it)^{-(m+k+1)} in polar form
    phase = (m + l) * (math.pi / 2) - (m + k + 1) * math.atan(t)
    mod = np.exp(-0.5 * (m + k + 1) * math.log1p(t * t))
    out[ok] = acc * mod * np.exp(1j * phase)
    return out


def heat_element(n: int, m: int, k: int, l: int, t: float) -> float:
    """(e^{-t Delta})_{nm,kl} for d = 1: the same positive binomial sum with t^{m+l-2v} / (1+t)^{m+k+1}."""
    _check_indices(n, m, k, l)
    t = float(t)
    if not t > 0:
        raise ValueError(f"heat semigroup needs t > 0, got {t}")
    if not admissible(n, m, k, l):
        return 0.0
    v_lo = max(0, m - n)
    v_hi = min(m, l)
    if v_lo > v_hi:
        return 0.0
    v = np.arange(v_lo, v_hi + 1, dtype=float)
    log_terms = (
        0.5 * (gammaln(n + 1) + gammaln(k + 1) + gammaln(m + 1) + gammaln(l + 1))
        - gammaln(m - v + 1)
        - gammaln(l - v + 1)
        - gammaln(n - m + v + 1)
        - gammaln(v + 1)
        + (m + l - 2 * v) * math.log(t)
        - (m + k + 1) * math.log1p(t)
    )
    top = float(np.max(log_terms))
    return float(math.exp(top) * np.sum(np.exp(log_terms - top)))


def heat_elements(n, m, k, l, t: float) -> np.ndarray:
    """Vectorised heat_element; the terms are positive, so a log-sum-exp over v is exact to rounding."""
    t = float(t)
    if not t > 0:
        raise ValueError(f"heat semigroup needs t > 0, got {t}")
    n, m, k, l = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (n, m, k, l)))
    if np.any((n < 0) | (m < 0) | (k < 0) | (l < 0)):
        raise ValueError("indices must be non-negative")
    ok = (m + k) == (n + l)
    out = np.zeros(n.shape)
    if not np.any(ok):
        return out
    n, m, k, l = (a[ok].astype(float) for a in (n, m, k, l))
    v_lo = np.maximum(0, m - n)
    v_hi = np.minimum(m, l)
    base = 0.5 * (gammaln(n + 1) + gammaln(k + 1) + gammaln(m + 1) + gammaln(l + 1)) - (m + k + 1) * math.log1p(t)
    vs = np.arange(int(v_hi.max()) + 1, dtype=float)[:, None]
    live = (vs >= v_lo) & (vs <= v_hi)
    with np.errstate(invalid="ignore"):
        logs = np.where(
            live,
            base
            - gammaln(np.maximum(m - vs, 0) + 1)
            - gammaln(np.maximum(l - vs, 0) + 1)
            - gammaln(np.maximum(n - m + vs, 0) + 1)
            - gammaln(vs + 1)
            + (m + l - 2 * vs) * math.log(t),
            -np.inf,
        )
    top = logs.max(axis=0)
    out[ok] = np.exp(top) * np.sum(np.exp(logs - top), axis=0)
    return out
