"""A-posteriori checks of trajectories: integral-equation residual and norm conservation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fock import FockOperator, apply_polynomial
from ..propagator import apply_free, build_blocks
from .flow import DEFAULT_LEAK_TOL, Trajectory

__all__ = [
    "duhamel_residual",
    "truncation_defect",
    "ConservationReport",
    "conservation_report",
    "SPECTRAL_TOL",
]

SPECTRAL_TOL = 1e-13
# per-step floating-point allowance, relative to ||phi0||_2
_ROUNDING_PER_STEP = 64 * np.finfo(float).eps


def _lagrange_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    w = np.ones(len(nodes))
    for j, xj in enumerate(nodes):
        for k, xk in enumerate(nodes):
            if k != j:
                w[j] *= (x - xk) / (xj - xk)
    return w


def _uniform_step(times: np.ndarray) -> float:
    h = np.diff(times)
    if np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
        raise ValueError("duhamel_residual needs uniformly spaced saved times")
    return float(h[0])


def duhamel_residual(traj: Trajectory, quad_order: int = 4) -> np.ndarray:
    """||phi(t_i) - U(t_i - t_0) phi_0 + i int_{t_0}^{t_i} U(t_i - s) N(phi(s)) ds||_2 at every saved time.

    The integral is accumulated step by step with a ``quad_order``-point
    Gauss-Legendre rule per step; phi(s) between saved states is the cubic
    Lagrange interpolant through the four nearest saved states.
    """
    times = traj.times
    n = len(times) - 1
    if n < 3:
        raise ValueError(f"need at least 4 saved states for cubic interpolation, got {n + 1}")
    if quad_order < 1:
        raise ValueError("quad_order must be >= 1")
    h = _uniform_step(times)
    N = traj.N
    x, w = np.polynomial.legendre.leggauss(quad_order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    step_table = build_blocks(h, N)
    node_tables = [build_blocks(h * (1.0 - xq), N) for xq in x]
    nonlinear = not traj.F.is_zero and traj.theta != 0

    states = traj.states
    psi = states[0]
    res = np.zeros(n + 1)
    for i in range(n):
        psi = apply_free(step_table, psi)
        if nonlinear:
            j0 = min(max(i - 1, 0), n - 3)
            stencil = np.arange(j0, j0 + 4, dtype=float)
            acc = np.zeros_like(psi.entries)
            for xq, wq, tab in zip(x, w, node_tables):
                lw = _lagrange_weights(stencil, i + xq)
                e = sum(c * states[j0 + k].entries for k, c in enumerate(lw))
                nl = apply_polynomial(FockOperator(traj.d, N, e), traj.F, traj.theta)
                acc = acc + (h * wq) * apply_free(tab, nl).entries
            psi = FockOperator(traj.d, N, psi.entries - 1j * acc)
        res[i + 1] = float(np.linalg.norm(states[i + 1].entries - psi.entries))
    return res


def truncation_defect(traj: Trajectory) -> float:
    """Bound on the F = 0 residual caused by the finite cutoff.

    Tables are exact restrictions P U P of the unitary group, so per step
    ||(U_N(h) - U_N(h/2)^2) phi|| <= sqrt(||phi||^2 - ||U_N(h/2) phi||^2), the
    recorded half-step loss. A floating-point allowance per step is added.
    """
    if traj.save_every != 1:
        raise ValueError("truncation_defect needs every step saved")
    norm0 = float(np.linalg.norm(traj.states[0].entries))
    steps = len(traj.half_step_loss)
    return float(np.sum(np.sqrt(traj.half_step_loss))) + steps * _ROUNDING_PER_STEP * max(norm0, 1.0)


@dataclass(frozen=True)
class ConservationReport:
    max_relative_drift: float
    max_step_drift: float
    max_spectral_drift: float
    max_leak: float
    leak_tol: float
    spectral_tol: float = SPECTRAL_TOL

    @property
    def leak_flagged(self) -> bool:
        return self.max_leak > self.leak_tol

    @property
    def spectrum_conserved(self) -> bool:
        return self.max_spectral_drift <= self.spectral_tol

    def as_dict(self) -> dict:
        return {
            "max_relative_drift": self.max_relative_drift,
            "max_step_drift": self.max_step_drift,
            "max_spectral_drift": self.max_spectral_drift,
            "max_leak": self.max_leak,
            "leak_flagged": self.leak_flagged,
            "spectrum_conserved": self.spectrum_conserved,
        }


def conservation_report(traj: Trajectory, leak_tol: float = DEFAULT_LEAK_TOL) -> ConservationReport:
    """Largest relative deviation of ||phi(t)||_2 from ||phi(t_0)||_2, plus per-step diagnostics."""
    norms = traj.norms()
    ref = norms[0]
    rel = float(np.max(np.abs(norms - ref)) / ref) if ref > 0 else float(np.max(norms))
    return ConservationReport(
        max_relative_drift=rel,
        max_step_drift=float(np.max(np.abs(traj.drift), initial=0.0)),
        max_spectral_drift=float(np.max(traj.spectral_drift, initial=0.0)),
        max_leak=float(np.max(traj.leak, initial=0.0)),
        leak_tol=leak_tol,
    )
