"""Split-step evolution of i d/dt phi = L phi + theta phi F(phi* phi) with exact sub-flows."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..fock import FockOperator, InteractionPolynomial
from ..fock.basis import multi_indices
from ..propagator import PropagatorTable, apply_free, build_blocks

__all__ = [
    "LeakError",
    "LeakWarning",
    "Trajectory",
    "nonlinear_flow",
    "strang_step",
    "evolve",
    "leak_fraction",
    "check_initial_support",
    "DEFAULT_LEAK_TOL",
    "SUPPORT_FLOOR",
]

DEFAULT_LEAK_TOL = 1e-6
SUPPORT_FLOOR = 1e-12


class LeakError(RuntimeError):
    """Mass reached the outer quarter of the cutoff box."""


class LeakWarning(RuntimeWarning):
    pass


def _hermitian_is_diagonal(h: np.ndarray) -> bool:
    return not np.any(h - np.diag(np.diag(h)))


def nonlinear_flow(phi: FockOperator, F: InteractionPolynomial, theta: float, dt: float,
                   return_spectrum: bool = False):
    """Exact solution of i d/dt phi = theta phi F(phi* phi) after time dt.

    phi* phi is conserved by this equation, so the flow is phi exp(-i dt theta F(phi* phi)).
    With ``return_spectrum`` also returns the eigenvalues of phi* phi used for the step.
    """
    e = phi.entries
    if not np.all(np.isfinite(e)):
        raise FloatingPointError("non-finite state entering the nonlinear sub-flow")
    if F.is_zero or dt == 0 or theta == 0:
        if return_spectrum:
            return phi, np.linalg.eigvalsh(e.conj().T @ e)
        return phi
    h = e.conj().T @ e
    if _hermitian_is_diagonal(h):
        lam = np.diag(h).real
        out = e * np.exp(-1j * dt * theta * F(lam))[None, :]
    else:
        lam, vec = np.linalg.eigh(h)
        phase = np.exp(-1j * dt * theta * F(lam))
        out = (e @ vec) * phase[None, :] @ vec.conj().T
    res = FockOperator(phi.d, phi.N, out)
    if return_spectrum:
        return res, np.sort(lam)
    return res


def strang_step(phi: FockOperator, dt: float, half_table: PropagatorTable,
                F: InteractionPolynomial, theta: float) -> FockOperator:
    """free(dt/2) after nonlinear(dt) after free(dt/2)."""
    if not math.isclose(half_table.t, dt / 2, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(f"half_table is built at t={half_table.t}, expected dt/2={dt / 2}")
    psi = apply_free(half_table, phi)
    psi = nonlinear_flow(psi, F, theta, dt)
    return apply_free(half_table, psi)


def leak_fraction(phi: FockOperator, frac: float = 0.75) -> float:
    """Share of ||phi||_2^2 carried by rows or columns with some index >= frac N."""
    total = float(np.linalg.norm(phi.entries))
    if total == 0.0:
        return 0.0
    idx = multi_indices(phi.d, phi.N)
    outer = np.any(idx >= math.ceil(frac * phi.N), axis=1)
    e = phi.entries
    inner = e[np.ix_(~outer, ~outer)]
    outside_sq = max(total**2 - float(np.sum(np.abs(inner) ** 2)), 0.0)
    return outside_sq / total**2


def check_initial_support(phi: FockOperator, floor: float = SUPPORT_FLOOR):
    """Initial data must live on indices < N/2 above ``floor``."""
    idx = multi_indices(phi.d, phi.N)
    rows, cols = np.nonzero(np.abs(phi.entries) > floor)
    if rows.size == 0:
        return
    top = int(max(idx[rows].max(), idx[cols].max()))
    if 2 * top >= phi.N:
        raise ValueError(
            f"initial data reaches index {top} >= N/2 = {phi.N / 2:g}; raise the cutoff N"
        )


@dataclass
class Trajectory:
    """Saved states of a uniform-step run.

    ``drift`` holds the relative l2-norm change of every step, ``half_step_loss``
    the squared mass lost by the first free half step of every step (a bound on
    the truncation defect), ``spectral_drift`` the largest relative change of the
    phi* phi eigenvalues across each nonlinear sub-step.
    """

    times: np.ndarray
    states: list
    theta: float
    F: InteractionPolynomial
    dt: float = 0.0
    save_every: int = 1
    drift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    half_step_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    spectral_drift: np.ndarray = field(default_factory=lambda: np.zeros(0))
    leak: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be increasing")
        shapes = {(s.d, s.N) for s in self.states}
        if len(shapes) > 1:
            raise ValueError(f"states with differing (d, N): {shapes}")

    @property
    def d(self) -> int:
        return self.states[0].d

    @property
    def N(self) -> int:
        return self.states[0].N

    def norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(s.entries) for s in self.states])


def _spectral_change(before: np.ndarray, after: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(before), initial=0.0)), 1e-300)
    return float(np.max(np.abs(after - before), initial=0.0)) / scale


def evolve(phi0: FockOperator, t0: float, t1: float, steps: int, F: InteractionPolynomial, theta: float,
           save_every: int = 1, leak_tol: float = DEFAULT_LEAK_TOL, on_leak: str = "raise",
           track_spectrum: bool = True, check_support: bool = True) -> Trajectory:
    """Uniform Strang steps from t0 to t1; states saved every ``save_every`` steps and at t1."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if save_every < 1:
        raise ValueError("save_every must be >= 1")
    if on_leak not in ("raise", "warn"):
        raise ValueError("on_leak must be 'raise' or 'warn'")
    if check_support:
        check_initial_support(phi0)
    dt = (t1 - t0) / steps
    half = build_blocks(dt / 2, phi0.N)
    phi = phi0
    times, states = [t0], [phi0]
    drift = np.zeros(steps)
    loss = np.zeros(steps)
    spec = np.zeros(steps)
    leaks = [leak_fraction(phi0)]
    warned = False
    for i in range(steps):
        before = float(np.linalg.norm(phi.entries))
        psi = apply_free(half, phi)
        mid = float(np.linalg.norm(psi.entries))
        loss[i] = max(before**2 - mid**2, 0.0)
        if track_spectrum:
            h = psi.entries.conj().T @ psi.entries
            spec_before = np.linalg.eigvalsh(h)
            psi = nonlinear_flow(psi, F, theta, dt)
            spec_after = np.linalg.eigvalsh(psi.entries.conj().T @ psi.entries)
            spec[i] = _spectral_change(spec_before, spec_after)
        else:
            psi = nonlinear_flow(psi, F, theta, dt)
        phi = apply_free(half, psi)
        after = float(np.linalg.norm(phi.entries))
        drift[i] = (after - before) / before if before else 0.0
        last = i == steps - 1
        if (i + 1) % save_every == 0 or last:
            lk = leak_fraction(phi)
            leaks.append(lk)
            if lk > leak_tol:
                msg = (f"squared-mass fraction {lk:.3g} beyond 3N/4 at t={t0 + (i + 1) * dt:.6g} "
                       f"exceeds tol.leak={leak_tol:g} (N={phi.N}); increase N")
                if on_leak == "raise":
                    raise LeakError(msg)
                if not warned:
                    warnings.warn(msg, LeakWarning, stacklevel=2)
                    warned = True
            times.append(t1 if last else t0 + (i + 1) * dt)
            states.append(phi)
    return Trajectory(
        times=np.array(times), states=states, theta=theta, F=F, dt=dt, save_every=save_every,
        drift=drift, half_step_loss=loss, spectral_drift=spec, leak=np.array(leaks),
    )
