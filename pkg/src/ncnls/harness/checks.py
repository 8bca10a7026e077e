"""Numerical suites shared by the commands, ``cmd_verify`` and the acceptance tests.

Each function returns plain numbers; the caller decides thresholds and records checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import duhamel_residual, evolve, soliton_find, truncation_defect
from ..fock import FockOperator, InteractionPolynomial, random_operator
from ..jacobi import KRASIKOV_MIN_PARAM, erdelyi_bound_check, krasikov_bound_check
from ..propagator import (
    apply_free,
    build_blocks,
    free_element_closed,
    free_elements_jacobi,
    heat_elements,
    populated_offsets,
)

__all__ = [
    "OracleDeviation",
    "admissible_tuples",
    "cross_oracle_deviation",
    "identity_defect",
    "offset_conservation_violations",
    "heat_bound_excess",
    "jacobi_x_grid",
    "erdelyi_violations",
    "krasikov_violations",
    "split_envelope_ratio",
    "reference_state",
    "conservation_drift",
    "strang_order_ratios",
    "duhamel_order_ratios",
    "free_residual_vs_defect",
    "soliton_replay_error",
    "MUTATION_FLIP_TERM",
]

# "closed_sign" mutation: negate the v = 1 term of the binomial sum
MUTATION_FLIP_TERM = 1


def admissible_tuples(max_index: int):
    """All (n, m, k, l) in [0, max_index]^4 with m + k = n + l, as four int arrays."""
    r = np.arange(max_index + 1)
    n, m, l = np.meshgrid(r, r, r, indexing="ij")
    k = n + l - m
    ok = (k >= 0) & (k <= max_index)
    return n[ok], m[ok], k[ok], l[ok]


@dataclass(frozen=True)
class OracleDeviation:
    max_relative: float
    worst: tuple  # (n, m, k, l, t)
    count: int


def cross_oracle_deviation(max_index: int, times, flip_term: int | None = None) -> OracleDeviation:
    """max |a - b| / max(|a|, |b|) between the exact sum and the Jacobi form (0 when both vanish)."""
    n, m, k, l = admissible_tuples(max_index)
    worst, worst_at = 0.0, ()
    for t in times:
        jac = free_elements_jacobi(n, m, k, l, t)
        ex = np.array([free_element_closed(int(a), int(b), int(c), int(e), t, flip_term=flip_term)
                       for a, b, c, e in zip(n, m, k, l)])
        scale = np.maximum(np.abs(ex), np.abs(jac))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, np.abs(ex - jac) / scale, 0.0)
        i = int(np.argmax(rel))
        if rel[i] > worst or not worst_at:
            worst, worst_at = float(rel[i]), (int(n[i]), int(m[i]), int(k[i]), int(l[i]), float(t))
    return OracleDeviation(worst, worst_at, len(n) * len(tuple(times)))


def identity_defect(N: int) -> float:
    """max |U(0) - I| over every block."""
    table = build_blocks(0.0, N)
    return max(float(np.max(np.abs(b - np.eye(b.shape[0])))) for b in table.blocks.values())


def offset_conservation_violations(N: int, t: float, rng: np.random.Generator, offsets=(0, 2, -3)) -> int:
    """Offsets populated by apply_free that the input did not carry (exact)."""
    phi = random_operator(1, N, rng).entries
    n, m = np.indices(phi.shape)
    phi = np.where(np.isin(n - m, offsets), phi, 0.0)
    before = set(populated_offsets(phi, 1, N))
    after = apply_free(build_blocks(t, N), FockOperator(1, N, phi))
    return len(set(populated_offsets(after.entries, 1, N)) - before)


def heat_bound_excess(max_index: int, times) -> float:
    """max over admissible tuples and times of heat - (1 + t)^-1."""
    n, m, k, l = admissible_tuples(max_index)
    return max(float(np.max(heat_elements(n, m, k, l, t))) - 1.0 / (1.0 + t) for t in times)


def jacobi_x_grid(points: int = 101) -> np.ndarray:
    """``points`` equispaced interior points of (-1, 1)."""
    return np.linspace(-1.0, 1.0, points + 2)[1:-1]


def erdelyi_violations(max_degree: int, max_param: int, points: int = 101) -> tuple[int, int]:
    """(violations, evaluations) over integer a, b <= max_param and degrees <= max_degree."""
    L, A, B, X = np.meshgrid(np.arange(max_degree + 1), np.arange(max_param + 1), np.arange(max_param + 1),
                             jacobi_x_grid(points), indexing="ij")
    _, _, ok = erdelyi_bound_check(L, A, B, X)
    return int(np.count_nonzero(~ok)), int(ok.size)


def krasikov_violations(max_degree: int, max_param: int, points: int = 101) -> tuple[int, int]:
    """Same sweep restricted to the stated domain: degree >= 6, a >= b >= (1 + sqrt 2)/4."""
    lo = math.ceil(KRASIKOV_MIN_PARAM)
    L, A, B, X = np.meshgrid(np.arange(6, max_degree + 1), np.arange(lo, max_param + 1),
                             np.arange(lo, max_param + 1), jacobi_x_grid(points), indexing="ij")
    keep = A >= B
    _, _, ok = krasikov_bound_check(L[keep], A[keep], B[keep], X[keep])
    return int(np.count_nonzero(~ok)), int(ok.size)


def split_envelope_ratio(times: np.ndarray, values: np.ndarray, weight) -> float:
    """Envelope fitted on the early half of the grid, tested on the late half.

    With w = weight(t), C = max over early t of w * value; returns
    max over late t of w * value / C (<= 1 means the early envelope holds).
    """
    w = weight(np.asarray(times)) * np.asarray(values)
    half = len(w) // 2
    return float(np.max(w[half:]) / np.max(w[:half]))


def reference_state(N: int) -> FockOperator:
    """0.5 |0><0| + 0.25i |1><0|: non-self-adjoint, off-diagonal, far inside the box."""
    e = np.zeros((N, N), complex)
    e[0, 0] = 0.5
    e[1, 0] = 0.25j
    return FockOperator(1, N, e)


def conservation_drift(N: int = 32, steps: int = 1000, theta: float = 1.0, F=None):
    """Trajectory of F(x) = x over [0, 1] with every step saved."""
    F = InteractionPolynomial([1.0]) if F is None else F
    return evolve(reference_state(N), 0.0, 1.0, steps, F, theta, save_every=1)


def _final_state(N, steps, F, theta):
    traj = evolve(reference_state(N), 0.0, 1.0, steps, F, theta, save_every=steps, track_spectrum=False)
    return traj.states[-1].entries


def strang_order_ratios(N: int = 64, steps=(8, 16, 32, 64, 128), reference_steps: int = 2048,
                        theta: float = 1.0) -> np.ndarray:
    """e(n) / e(2n) for the final-time error against a fine-step reference, F(x) = x."""
    F = InteractionPolynomial([1.0])
    ref = _final_state(N, reference_steps, F, theta)
    errs = np.array([np.linalg.norm(_final_state(N, s, F, theta) - ref) for s in steps])
    return errs[:-1] / errs[1:]


def duhamel_order_ratios(N: int = 64, steps=(16, 32, 64), theta: float = 1.0) -> np.ndarray:
    """max residual(n) / max residual(2n) for F(x) = x with every step saved."""
    F = InteractionPolynomial([1.0])
    res = []
    for s in steps:
        traj = evolve(reference_state(N), 0.0, 1.0, s, F, theta, save_every=1, track_spectrum=False)
        res.append(float(np.max(duhamel_residual(traj))))
    res = np.array(res)
    return res[:-1] / res[1:]


def free_residual_vs_defect(N: int = 32, steps: int = 1000) -> tuple[float, float]:
    """(max Duhamel residual, truncation defect) for F = 0."""
    traj = evolve(reference_state(N), 0.0, 1.0, steps, InteractionPolynomial([]), 1.0, save_every=1,
                  track_spectrum=False)
    return float(np.max(duhamel_residual(traj))), truncation_defect(traj)


def soliton_replay_error(F: InteractionPolynomial, theta: float, N: int = 64, t1: float = 1.0,
                         steps: int = 4000, tol: float = 1e-8):
    """(soliton, max over saved times of ||phi(t) - exp(-i omega t) phi0||_2)."""
    sol = soliton_find(F, theta, N=N, tol=tol)
    traj = evolve(sol.phi0, 0.0, t1, steps, F, theta, save_every=max(steps // 20, 1), track_spectrum=False)
    err = max(float(np.linalg.norm(s.entries - np.exp(-1j * sol.omega * t) * sol.phi0.entries))
              for t, s in zip(traj.times, traj.states))
    return sol, err
