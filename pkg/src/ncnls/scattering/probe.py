"""Numerical evidence that soliton orbits are not asymptotically free.

For the soliton phi(t) = exp(-i omega t) phi0 and free candidates psi = c phi0,

    ||phi(t) - c U(t) phi0||_2^2 = (1 + |c|^2) ||phi0||_2^2 - 2 Re(c exp(i omega t) <phi0, U(t) phi0>),

using ||U(t) phi0||_2 = ||phi0||_2. The overlap is a finite sum of exact
propagator elements over the support of phi0, so no cutoff enters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import evolve, soliton_find
from ..fock import InteractionPolynomial
from ..propagator import free_elements

__all__ = ["SurjectivityReport", "non_surjectivity_probe", "soliton_overlap"]


@dataclass(frozen=True)
class SurjectivityReport:
    theta: float
    omega: float
    phi0_op_norm: float
    phi0_l2_norm: float
    t_window: tuple
    scales: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)
    sup_deviation: np.ndarray = field(repr=False)  # shape (len(scales), len(phases))
    identity_times: np.ndarray = field(repr=False)
    identity_curve: np.ndarray = field(repr=False)  # deviation for psi = phi0
    replay_error: float = float("nan")
    soliton_residual: float = float("nan")

    @property
    def min_sup_deviation(self) -> float:
        return float(np.min(self.sup_deviation))

    @property
    def best_candidate(self) -> complex:
        i, j = np.unravel_index(np.argmin(self.sup_deviation), self.sup_deviation.shape)
        return complex(self.scales[i] * np.exp(1j * self.phases[j]))

    @property
    def bounded_away(self) -> bool:
        """min over candidates of sup_t deviation >= 0.5 ||phi0||_op."""
        return self.min_sup_deviation >= 0.5 * self.phi0_op_norm

    def summary(self) -> dict:
        return {
            "theta": self.theta,
            "omega": self.omega,
            "phi0_op_norm": self.phi0_op_norm,
            "phi0_l2_norm": self.phi0_l2_norm,
            "min_sup_deviation": self.min_sup_deviation,
            "best_candidate": [self.best_candidate.real, self.best_candidate.imag],
            "bounded_away": self.bounded_away,
            "replay_error": self.replay_error,
            "soliton_residual": self.soliton_residual,
        }


def soliton_overlap(x: np.ndarray, times, floor: float = 1e-14) -> np.ndarray:
    """<phi0, U(t) phi0> for real diagonal phi0 = diag(x) (d = 1), exact elements."""
    idx = np.flatnonzero(np.abs(x) > floor)
    a, b = np.meshgrid(idx, idx, indexing="ij")
    weights = (x[a] * x[b]).ravel()
    out = []
    for t in np.atleast_1d(times):
        if t == 0:
            out.append(complex(np.sum(x[idx] ** 2)))
            continue
        el = free_elements(a.ravel(), a.ravel(), b.ravel(), b.ravel(), float(t))
        out.append(complex(np.sum(weights * el)))
    return np.array(out)


def non_surjectivity_probe(F: InteractionPolynomial, theta: float, N: int = 64, t_window=(10.0, 100.0),
                           n_times: int = 181, scales=None, n_phases: int = 8, replay_time: float = 1.0,
                           replay_steps: int = 4000) -> SurjectivityReport:
    """min over candidates c of sup over the window of ||phi(t) - c U(t) phi0||_2."""
    sol = soliton_find(F, theta, N=N)
    if sol.trivial:
        raise ValueError("soliton search returned the trivial solution; raise theta")
    if sol.phi0.d != 1:
        raise ValueError("the probe is implemented for d = 1")
    x = np.diag(sol.phi0.entries).real
    l2 = float(np.linalg.norm(x))
    op = float(np.max(np.abs(x)))
    scales = np.linspace(0.0, 2.0, 41) if scales is None else np.asarray(scales, dtype=float)
    phases = 2 * np.pi * np.arange(n_phases) / n_phases
    ts = np.linspace(t_window[0], t_window[1], n_times)
    ov = soliton_overlap(x, ts) * np.exp(1j * sol.omega * ts)
    c = scales[:, None, None] * np.exp(1j * phases)[None, :, None]
    dev2 = (1 + np.abs(c) ** 2) * l2**2 - 2 * np.real(c * ov[None, None, :])
    sup = np.sqrt(np.maximum(dev2, 0.0)).max(axis=2)

    t_id = np.linspace(0.0, t_window[1], 101)
    ov_id = soliton_overlap(x, t_id) * np.exp(1j * sol.omega * t_id)
    id_curve = np.sqrt(np.maximum(2 * l2**2 - 2 * np.real(ov_id), 0.0))

    replay = float("nan")
    if replay_steps:
        traj = evolve(sol.phi0, 0.0, replay_time, replay_steps, F, theta,
                      save_every=max(replay_steps // 10, 1), track_spectrum=False)
        replay = max(
            float(np.linalg.norm(s.entries - np.exp(-1j * sol.omega * t) * sol.phi0.entries))
            for t, s in zip(traj.times, traj.states)
        )
    return SurjectivityReport(
        theta=theta, omega=sol.omega, phi0_op_norm=op, phi0_l2_norm=l2, t_window=tuple(t_window),
        scales=scales, phases=phases, sup_deviation=sup, identity_times=t_id, identity_curve=id_curve,
        replay_error=replay, soliton_residual=sol.residual,
    )
