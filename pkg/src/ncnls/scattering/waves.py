"""Wave operators for i d/dt phi = L phi + theta phi F(phi* phi) by Picard iteration on a finite horizon.

The integral equations with data at t = +T (plus) or t = -T (minus),

    phi(t) = U(t) phi_+ + i int_t^T U(t-s) N(phi(s)) ds,
    phi(t) = U(t) phi_- - i int_{-T}^t U(t-s) N(phi(s)) ds,

are discretised by Gauss collocation on uniform panels covering [-T, T]
(0 is a panel boundary). Each Picard sweep is a single recursion across the
panels that needs only a fixed set of panel-local propagator tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..fock import DiagonalOperator, FockOperator, InteractionPolynomial, norm_a, norm_p_alpha
from ..fock.basis import weight_matrix
from ..propagator import apply_free_array, cached_blocks, populated_offsets

__all__ = [
    "ScatteringConfig",
    "WaveResult",
    "ContractionFailure",
    "GateError",
    "scattering_norm",
    "default_norm_grid",
    "picard_wave",
    "scattering_map",
    "diagonal_wave",
    "DIRECTIONS",
]

DIRECTIONS = ("plus", "minus")


class ContractionFailure(ArithmeticError):
    def __init__(self, msg: str, ratios=(), gate_value: float = float("nan")):
        self.ratios = list(ratios)
        self.gate_value = gate_value
        super().__init__(f"{msg} (gate value {gate_value:.4g}, ratios {[round(r, 4) for r in self.ratios]})")


class GateError(ValueError):
    """Data too large for the configured smallness gate."""


@dataclass(frozen=True)
class ScatteringConfig:
    alpha: float = 2.5
    T: float = 2.5
    quad_order: int = 4
    max_picard: int = 60
    contraction_tol: float = 1e-12
    delta: float = 1.0
    delta0: float | None = None
    horizon_cap: float = 64.0
    panel_width: float = 0.25
    stability_tol: float = 1e-2
    allow_linear: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"horizon T must be >= 1, got {self.T}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.delta0 is not None and self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.quad_order < 1 or self.max_picard < 1:
            raise ValueError("quad_order and max_picard must be >= 1")
        if self.contraction_tol <= 0 or self.panel_width <= 0 or self.stability_tol <= 0:
            raise ValueError("tolerances and panel width must be positive")
        if self.horizon_cap < self.T:
            raise ValueError("horizon_cap must be >= T")

    @property
    def gate0(self) -> float:
        return self.delta if self.delta0 is None else self.delta0

    def panels_per_side(self) -> int:
        return max(1, math.ceil(self.T / self.panel_width - 1e-9))


@dataclass(frozen=True)
class WaveResult:
    direction: str
    times: np.ndarray
    states: list = field(repr=False)
    omega_value: object = field(repr=False)
    contraction_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    differences: np.ndarray = field(default_factory=lambda: np.zeros(0))
    convergence_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))
    triple_curve: np.ndarray | None = None
    T: float = 0.0
    iterations: int = 0
    converged: bool = False
    gate_value: float = float("nan")
    tail_estimate: float = float("nan")
    horizons: tuple = ()
    horizon_stable: bool | None = None
    decay_constant: float = float("nan")

    def toward_horizon(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, curve) on the half-line facing the data, ordered toward the horizon."""
        if self.direction == "plus":
            sel = self.times >= 0
            return self.times[sel], self.convergence_curve[sel]
        sel = self.times <= 0
        return self.times[sel][::-1], self.convergence_curve[sel][::-1]

    def curve_monotone(self, rel_noise: float = 1e-8) -> bool:
        """Non-increasing toward the horizon up to rel_noise times the curve maximum."""
        _, c = self.toward_horizon()
        if c.size < 2:
            return True
        slack = rel_noise * max(float(np.max(c)), 1e-300)
        return bool(np.all(np.diff(c) <= slack))

    def ratios_geometric(self, min_r2: float = 0.9) -> bool:
        """All ratios below 1 and log(difference) linear in the sweep index (R^2 >= min_r2)."""
        r = self.contraction_ratios
        if r.size == 0:
            return True
        if not np.all(r < 1):
            return False
        y = np.log(self.differences[self.differences > 0])
        if y.size < 3:
            return True
        k = np.arange(y.size)
        fit = np.polyval(np.polyfit(k, y, 1), k)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        return ss_tot == 0 or 1 - float(np.sum((y - fit) ** 2)) / ss_tot >= min_r2

    def convergence_csv(self, path, header: str = "") -> Path:
        cols = "t,conv_2alpha" + (",conv_triple" if self.triple_curve is not None else "")
        lines = ([f"# {header}"] if header else []) + [cols]
        for i, (t, c) in enumerate(zip(self.times, self.convergence_curve)):
            row = f"{t:.17g},{c:.17g}"
            if self.triple_curve is not None:
                row += f",{self.triple_curve[i]:.17g}"
            lines.append(row)
        path = Path(path)
        path.write_text("\n".join(lines) + "\n")
        return path

    def ratios_csv(self, path, header: str = "") -> Path:
        lines = ([f"# {header}"] if header else []) + ["iter,ratio"]
        lines += [f"{i + 1},{r:.17g}" for i, r in enumerate(self.contraction_ratios)]
        path = Path(path)
        path.write_text("\n".join(lines) + "\n")
        return path


# ---------------------------------------------------------------- state models


@dataclass
class _Model:
    """Array-level operations for one state space (full operators or diagonals)."""

    d: int
    N: int
    prop: Callable[[float, np.ndarray], np.ndarray]
    nonlin: Callable[[np.ndarray], np.ndarray]
    norm: Callable[[np.ndarray], float]
    a_norm: Callable[[np.ndarray], float]
    wrap: Callable[[np.ndarray], object]


def _full_model(d: int, N: int, alpha: float, F: InteractionPolynomial, theta: float) -> _Model:
    w = weight_matrix(d, N, float(alpha))

    def prop(tau, x):
        if tau == 0.0:
            return x
        offs = populated_offsets(x, d, N)
        if not offs:
            return x
        return apply_free_array(cached_blocks(tau, N, offsets=offs), x, d)

    def nonlin(x):
        if F.is_zero:
            return np.zeros_like(x)
        return theta * (x @ F.on_matrix(x.conj().T @ x))

    return _Model(
        d=d, N=N, prop=prop, nonlin=nonlin,
        norm=lambda x: float(np.linalg.norm(w * x)),
        a_norm=lambda x: norm_a(FockOperator(d, N, x)),
        wrap=lambda x: FockOperator(d, N, x),
    )


def _diag_model(d: int, N: int, F: InteractionPolynomial, theta: float) -> _Model:
    def prop(tau, x):
        if tau == 0.0:
            return x
        u0 = cached_blocks(tau, N, offsets=[0]).block(0)
        y = x.reshape((N,) * d)
        for ax in range(d):
            y = np.moveaxis(np.tensordot(u0, y, axes=(1, ax)), 0, ax)
        return y.reshape(-1)

    def nonlin(x):
        return theta * x * F(np.abs(x) ** 2)

    return _Model(
        d=d, N=N, prop=prop, nonlin=nonlin,
        norm=lambda x: float(np.linalg.norm(x)),
        a_norm=lambda x: float(np.max(np.abs(x), initial=0.0)),
        wrap=lambda x: DiagonalOperator(d, N, x),
    )


# ---------------------------------------------------------------- quadrature


def _lagrange_integrals(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """S_minus[j,q] = int_0^{x_j} l_q, S_plus[j,q] = int_{x_j}^1 l_q for the Lagrange basis on x."""
    Q = len(x)
    V = np.vander(x, Q, increasing=True)
    coef = np.linalg.inv(V)  # column q holds the monomial coefficients of l_q
    powers = np.arange(1, Q + 1)
    prim = lambda y: (y[:, None] ** powers[None, :] / powers[None, :]) @ coef  # noqa: E731
    s_minus = prim(x)
    total = prim(np.array([1.0]))[0]
    return s_minus, total[None, :] - s_minus


@dataclass
class _Grid:
    T: float
    h: float
    M: int  # panels per side
    x: np.ndarray
    w: np.ndarray

    @property
    def boundaries(self) -> np.ndarray:
        return -self.T + self.h * np.arange(2 * self.M + 1)

    def nodes(self, p: int) -> np.ndarray:
        return -self.T + self.h * (p + self.x)

    def all_times(self) -> np.ndarray:
        b = self.boundaries
        pieces = [b[:1]]
        for p in range(2 * self.M):
            pieces += [self.nodes(p), b[p + 1 : p + 2]]
        return np.concatenate(pieces)


def _make_grid(T: float, cfg: ScatteringConfig) -> _Grid:
    M = max(1, math.ceil(T / cfg.panel_width - 1e-9))
    x, w = np.polynomial.legendre.leggauss(cfg.quad_order)
    return _Grid(T=T, h=T / M, M=M, x=(x + 1) / 2, w=w / 2)


def _free_term(model: _Model, data: np.ndarray, g: _Grid):
    """U(t) data at every boundary and node, recursively from t = 0."""
    P = 2 * g.M
    bnd = [None] * (P + 1)
    nod = [None] * P
    bnd[g.M] = data
    for p in range(g.M, P):
        bnd[p + 1] = model.prop(g.h, bnd[p])
        nod[p] = [model.prop(g.h * xq, bnd[p]) for xq in g.x]
    for p in range(g.M - 1, -1, -1):
        bnd[p] = model.prop(-g.h, bnd[p + 1])
        nod[p] = [model.prop(-g.h * (1 - xq), bnd[p + 1]) for xq in g.x]
    return bnd, nod


def _duhamel_sweep(model: _Model, direction: str, nl, g: _Grid, s_minus, s_plus):
    """Integral term at every boundary and node given N(phi) at the nodes."""
    P = 2 * g.M
    h, x, w = g.h, g.x, g.w
    Q = len(x)
    zero = np.zeros_like(nl[0][0])
    bnd = [zero] * (P + 1)
    nod = [None] * P
    if direction == "plus":
        for p in range(P - 1, -1, -1):
            carry = bnd[p + 1]
            vals = []
            for j in range(Q):
                acc = model.prop(-h * (1 - x[j]), carry)
                for q in range(Q):
                    if s_plus[j, q] != 0:
                        acc = acc + (h * s_plus[j, q]) * model.prop(h * (x[j] - x[q]), nl[p][q])
                vals.append(acc)
            nod[p] = vals
            acc = model.prop(-h, carry)
            for q in range(Q):
                acc = acc + (h * w[q]) * model.prop(-h * x[q], nl[p][q])
            bnd[p] = acc
    else:
        for p in range(P):
            carry = bnd[p]
            vals = []
            for j in range(Q):
                acc = model.prop(h * x[j], carry)
                for q in range(Q):
                    if s_minus[j, q] != 0:
                        acc = acc + (h * s_minus[j, q]) * model.prop(h * (x[j] - x[q]), nl[p][q])
                vals.append(acc)
            nod[p] = vals
            acc = model.prop(h, carry)
            for q in range(Q):
                acc = acc + (h * w[q]) * model.prop(h * (1 - x[q]), nl[p][q])
            bnd[p + 1] = acc
    return bnd, nod


def _flatten(bnd, nod) -> list:
    out = [bnd[0]]
    for p in range(len(nod)):
        out += list(nod[p]) + [bnd[p + 1]]
    return out


def _picard(model: _Model, data: np.ndarray, direction: str, g: _Grid, cfg: ScatteringConfig,
            strict: bool, gate_value: float, warm=None):
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    s_minus, s_plus = _lagrange_integrals(g.x)
    free_b, free_n = _free_term(model, data, g)
    free = _flatten(free_b, free_n)
    phi = list(free) if warm is None else warm(g, free)
    P = 2 * g.M
    Q = len(g.x)
    sign = 1j if direction == "plus" else -1j
    diffs, ratios = [], []
    converged = False
    scale = max(max(model.norm(f) for f in free), 1e-300)
    integral = [np.zeros_like(data)] * len(free)
    for it in range(cfg.max_picard):
        nl = [[model.nonlin(phi[1 + p * (Q + 1) + q]) for q in range(Q)] for p in range(P)]
        ib, inod = _duhamel_sweep(model, direction, nl, g, s_minus, s_plus)
        integral = _flatten(ib, inod)
        new = [f + sign * v for f, v in zip(free, integral)]
        diff = max(model.norm(a - b) for a, b in zip(new, phi))
        phi = new
        diffs.append(diff)
        if len(diffs) >= 2 and diffs[-2] > 0:
            ratios.append(diff / diffs[-2])
            if strict and ratios[-1] >= 1:
                raise ContractionFailure("Picard iteration is not contracting", ratios, gate_value)
        if diff <= cfg.contraction_tol * scale:
            converged = True
            break
    return phi, free, integral, np.array(diffs), np.array(ratios), converged, it + 1


# ---------------------------------------------------------------- public API


def default_norm_grid(T: float, n_log: int = 24, n_small: int = 8) -> np.ndarray:
    """Log-uniform samples of [1, T] plus [0.01, 1)."""
    small = np.logspace(-2, 0, n_small, endpoint=False)
    big = np.logspace(0, math.log10(T), n_log) if T > 1 else np.array([1.0])
    return np.unique(np.concatenate([small, big]))


def scattering_norm(phi: FockOperator, alpha: float, t_grid) -> float:
    """||phi||_{2,alpha} + max over +-t in the grid of |t|^{d/2} ||U(t) phi||_a (a lower bound for the sup)."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty time grid")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if not np.any(phi.entries):
        return 0.0
    d, N = phi.d, phi.N
    best = 0.0
    for t in np.unique(np.abs(grid)):
        for s in ((t, -t) if t else (0.0,)):
            table = cached_blocks(s, N, offsets=populated_offsets(phi.entries, d, N))
            val = norm_a(FockOperator(d, N, apply_free_array(table, phi.entries, d)))
            best = max(best, abs(s) ** (d / 2) * val)
    return norm_p_alpha(phi, 2, alpha) + best


def _check_interaction(F: InteractionPolynomial, d: int, cfg: ScatteringConfig, diagonal: bool):
    low = F.lowest_degree
    if F.is_zero:
        return
    if diagonal and low < 2:
        raise ValueError("the diagonal construction needs F without linear term")
    if not diagonal and low < 2 and d <= 2 and not cfg.allow_linear:
        raise ValueError("F has a linear term; for d <= 2 enable allow_linear to run it as an experiment")


def _tail_estimate(model: _Model, phi_T: np.ndarray, F: InteractionPolynomial, theta: float, T: float) -> float:
    """Size of the neglected integral beyond the horizon, extrapolating ||phi(s)||_a <= ||phi(T)||_a (T/s)^{d/2}."""
    n2 = model.norm(phi_T)
    na = model.a_norm(phi_T)
    total = 0.0
    for p, c in enumerate(F.coefficients, start=1):
        if c == 0:
            continue
        if p * model.d <= 1:
            return float("inf")
        total += abs(theta * c) * n2 * na ** (2 * p) * T / (p * model.d - 1)
    return total


def _triple_curve(model: _Model, times, integral, alpha_grid) -> np.ndarray:
    out = []
    for t, b in zip(times, integral):
        sup = 0.0
        for tau in alpha_grid:
            for s in (tau, -tau):
                sup = max(sup, abs(s) ** (model.d / 2) * model.a_norm(model.prop(s - t, b)))
        out.append(model.norm(b) + sup)
    return np.array(out)


def _result(model, direction, g, phi, free, integral, diffs, ratios, converged, iters, gate, F, theta,
            triple, horizons=()) -> WaveResult:
    times = g.all_times()
    curve = np.array([model.norm(a - b) for a, b in zip(phi, free)])
    zero_idx = int(np.argmin(np.abs(times)))
    edge = phi[-1] if direction == "plus" else phi[0]
    tail = _tail_estimate(model, edge, F, theta, g.T)
    triple_curve = None
    if triple and F.lowest_degree >= 2:
        triple_curve = _triple_curve(model, times, [a - b for a, b in zip(phi, free)], default_norm_grid(g.T, 8, 3))
    return WaveResult(
        direction=direction, times=times, states=[model.wrap(x) for x in phi],
        omega_value=model.wrap(phi[zero_idx]), contraction_ratios=ratios, differences=diffs,
        convergence_curve=curve, triple_curve=triple_curve, T=g.T, iterations=iters,
        converged=converged, gate_value=gate, tail_estimate=tail, horizons=tuple(horizons) or (g.T,),
    )


def picard_wave(phi_pm: FockOperator, direction: str, cfg: ScatteringConfig, F: InteractionPolynomial,
                theta: float, triple: bool = False, gate: bool = True) -> WaveResult:
    """Omega_{+-} phi_pm = phi(0) for small data, with contraction log and convergence curve."""
    d, N = phi_pm.d, phi_pm.N
    if cfg.alpha <= 2 * d:
        raise ValueError(f"alpha must exceed 2d = {2 * d}, got {cfg.alpha}")
    _check_interaction(F, d, cfg, diagonal=False)
    gate_value = scattering_norm(phi_pm, cfg.alpha, default_norm_grid(cfg.T)) if gate else float("nan")
    if gate and gate_value >= cfg.delta:
        raise GateError(f"|||phi|||_alpha = {gate_value:.4g} is not below delta = {cfg.delta:g}")
    model = _full_model(d, N, cfg.alpha, F, theta)
    g = _make_grid(cfg.T, cfg)
    out = _picard(model, np.array(phi_pm.entries), direction, g, cfg, strict=True, gate_value=gate_value)
    phi, free, integral, diffs, ratios, converged, iters = out
    if not converged:
        raise ContractionFailure(f"no convergence in {cfg.max_picard} Picard sweeps", ratios, gate_value)
    return _result(model, direction, g, phi, free, integral, diffs, ratios, converged, iters, gate_value,
                   F, theta, triple)


def scattering_map(phi_minus: FockOperator, cfg: ScatteringConfig, F: InteractionPolynomial,
                   theta: float) -> tuple[FockOperator, WaveResult]:
    """phi_+ = U(-T) phi^-(T), evaluated as phi_- - i int_{-T}^{T} U(-s) N(phi^-(s)) ds.

    The integral is summed panel by panel with Horner's rule in U(-h), so F = 0
    returns phi_- exactly.
    """
    n0 = norm_p_alpha(phi_minus, 2, cfg.alpha)
    if n0 > cfg.gate0:
        raise GateError(f"||phi_-||_(2,alpha) = {n0:.4g} exceeds delta0 = {cfg.gate0:g}")
    wave = picard_wave(phi_minus, "minus", cfg, F, theta)
    d, N = phi_minus.d, phi_minus.N
    model = _full_model(d, N, cfg.alpha, F, theta)
    g = _make_grid(cfg.T, cfg)
    Q = len(g.x)
    states = [s.entries for s in wave.states]
    acc = np.zeros_like(phi_minus.entries)
    for p in range(2 * g.M - 1, -1, -1):
        panel = np.zeros_like(acc)
        for q in range(Q):
            nl = model.nonlin(states[1 + p * (Q + 1) + q])
            panel = panel + (g.h * g.w[q]) * model.prop(-g.h * g.x[q], nl)
        acc = panel + model.prop(-g.h, acc)
    # acc = sum_p U(-(a_p + T)) Y_p, so U(T) acc is the integral of U(-s) N over [-T, T]
    phi_plus = phi_minus.entries - 1j * model.prop(g.T, acc)
    result = FockOperator(d, N, phi_plus)
    out = norm_p_alpha(result, 2, cfg.alpha)
    if out > 2 * cfg.gate0:
        raise ContractionFailure(f"||phi_+||_(2,alpha) = {out:.4g} exceeds 2 delta0", wave.contraction_ratios,
                                 wave.gate_value)
    return result, wave


def diagonal_wave(phi_pm: DiagonalOperator, cfg: ScatteringConfig, F: InteractionPolynomial, theta: float,
                  direction: str = "plus") -> WaveResult:
    """Wave operator on diagonal data (j = 0 block only), no smallness gate.

    The horizon doubles from cfg.T until Picard converges and Omega changes by
    less than cfg.stability_tol (relative) between consecutive horizons, or
    until cfg.horizon_cap. Iterates are warm-started from the previous horizon.
    """
    d, N = phi_pm.d, phi_pm.N
    _check_interaction(F, d, cfg, diagonal=True)
    model = _diag_model(d, N, F, theta)
    data = np.array(phi_pm.values, dtype=complex)
    T = cfg.T
    prev = None
    horizons = []
    while True:
        g = _make_grid(T, cfg)
        warm = None
        if prev is not None:
            warm = _warm_start(prev)
        out = _picard(model, data, direction, g, cfg, strict=False, gate_value=float("nan"), warm=warm)
        phi, free, integral, diffs, ratios, converged, iters = out
        horizons.append(T)
        res = _result(model, direction, g, phi, free, integral, diffs, ratios, converged, iters,
                      float("nan"), F, theta, False, horizons)
        if converged and prev is not None:
            a = np.asarray(res.omega_value.values)
            b = np.asarray(prev.omega_value.values)
            if np.linalg.norm(a - b) <= cfg.stability_tol * max(np.linalg.norm(a), 1e-300):
                return replace(res, horizon_stable=True, decay_constant=_diagonal_decay_constant(model, data, T))
        if 2 * T > cfg.horizon_cap + 1e-12:
            if converged:
                return replace(res, horizon_stable=False, decay_constant=_diagonal_decay_constant(model, data, T))
            raise ContractionFailure(f"horizon cap {cfg.horizon_cap:g} reached without contraction", ratios)
        prev = res
        T *= 2


def _diagonal_decay_constant(model: _Model, data: np.ndarray, T: float, points: int = 12) -> float:
    """max over t in [1, T] of ||U(t) phi||_op t^d / ((1 + log t)^d ||phi||_1) for diagonal phi."""
    l1 = float(np.sum(np.abs(data)))
    if l1 == 0:
        return 0.0
    d = model.d
    ts = np.logspace(0, math.log10(T), points)
    vals = [model.a_norm(model.prop(t, data)) * t**d / (1 + math.log(t)) ** d for t in ts]
    return float(max(vals)) / l1


def _warm_start(prev: WaveResult):
    """Reuse the previous horizon's iterate at shared times, free evolution elsewhere."""
    lookup = {round(float(t), 12): np.asarray(s.values) for t, s in zip(prev.times, prev.states)}

    def init(g: _Grid, free):
        times = g.all_times()
        return [lookup.get(round(float(t), 12), f) for t, f in zip(times, free)]

    return init
