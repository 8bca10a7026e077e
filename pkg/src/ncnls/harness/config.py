"""Plain-text ``key = value`` experiment configuration.

One key per line, ``#`` starts a comment. Every command accepts the global keys
``d``, ``N``, ``seed`` and ``out_dir`` plus its own; unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from ..fock import FockOperator, InteractionPolynomial, read_snapshot
from ..propagator import MAX_CUTOFF, ResourceLimitError

__all__ = [
    "COMMANDS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
    "parse_entries",
    "parse_time_grid",
]

COMMANDS = ("propagator", "evolve", "scatter", "verify")


class ConfigError(ValueError):
    pass


# ---- value parsers -------------------------------------------------------

def _int(s: str) -> int:
    return int(s)


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _pos_float(s: str) -> float:
    v = _float(s)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _opt_pos_float(s: str):
    return None if s.strip().lower() in ("auto", "none", "") else _pos_float(s)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean (true/false)")


def _str(s: str) -> str:
    return s.strip()


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    return parse


def _floats(s: str) -> tuple:
    vals = tuple(_float(p) for p in s.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _ints(s: str) -> tuple:
    return tuple(int(p) for p in s.replace(",", " ").split())


def _poly(s: str) -> str:
    InteractionPolynomial.from_string(s)
    return " ".join(s.replace(",", " ").split())


def parse_time_grid(spec: str) -> np.ndarray:
    """``log:a:b:n``, ``lin:a:b:n`` or an explicit comma/space separated list."""
    spec = spec.strip()
    if not spec:
        raise ValueError("empty time grid")
    if spec.startswith(("log:", "lin:")):
        kind, a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise ValueError("empty time grid")
        if kind == "log":
            if a <= 0 or b <= 0:
                raise ValueError("log grid bounds must be positive")
            return np.logspace(math.log10(a), math.log10(b), n)
        return np.linspace(a, b, n)
    return np.array(_floats(spec))


def _grid(s: str) -> str:
    parse_time_grid(s)
    return s.strip()


def parse_entries(spec: str, d: int, N: int) -> FockOperator:
    """``n_1..n_d m_1..m_d re im`` groups separated by ``;``, or ``file:<snapshot path>``."""
    spec = spec.strip()
    if spec.startswith("file:"):
        phi = read_snapshot(spec[5:].strip())
        if (phi.d, phi.N) != (d, N):
            raise ConfigError(f"snapshot has (d, N) = {(phi.d, phi.N)}, config has {(d, N)}")
        return phi
    ent = np.zeros((N**d, N**d), complex)
    shape = (N,) * d
    for group in filter(None, (g.strip() for g in spec.split(";"))):
        parts = group.split()
        if len(parts) != 2 * d + 2:
            raise ConfigError(f"entry {group!r} needs {2 * d} indices and re im")
        idx = [int(p) for p in parts[: 2 * d]]
        if any(i < 0 or i >= N for i in idx):
            raise ConfigError(f"entry {group!r} has an index outside [0, {N})")
        r = np.ravel_multi_index(idx[:d], shape)
        c = np.ravel_multi_index(idx[d:], shape)
        ent[r, c] = complex(float(parts[-2]), float(parts[-1]))
    return FockOperator(d, N, ent)


# ---- schema --------------------------------------------------------------

ALL = COMMANDS


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    defaults: Mapping[str, str]  # command -> default text; a command absent here rejects the key


def _k(parse, default: str | None = None, commands: Iterable[str] = ALL, **per_command: str) -> _Key:
    defaults = {c: default for c in commands}
    defaults.update(per_command)
    return _Key(parse, defaults)


SCHEMA: dict[str, _Key] = {
    # global
    "d": _k(_pos_int, "1"),
    "N": _k(_pos_int, propagator="96", evolve="32", scatter="48", verify="32"),
    "seed": _k(_int, "42"),
    "out_dir": _k(_str, "out"),
    # propagator
    "mode": _k(_str, commands=(), propagator="sup_all", scatter="wave"),
    "fixed": _k(_ints, "0 0 0 0", ("propagator",)),
    "t_grid": _k(_grid, "log:10:10000:25", ("propagator",)),
    "method": _k(_choice("auto", "jacobi", "closed", "exact"), "auto", ("propagator",)),
    "cross.max_index": _k(_nonneg_int, commands=(), propagator="32", verify="12"),
    "cross.times": _k(_floats, "0.1 1 10 100", ("propagator", "verify")),
    "heat.max_index": _k(_nonneg_int, commands=(), propagator="64", verify="24"),
    "heat.times": _k(_floats, "0.5 1 2 10", ("propagator", "verify")),
    "tol.cross": _k(_pos_float, "1e-9", ("propagator", "verify")),
    "tol.heat": _k(_pos_float, "1e-13", ("propagator", "verify")),
    "mutation": _k(_choice("none", "closed_sign"), "none", ("propagator", "verify")),
    # dynamics
    "F": _k(_poly, commands=(), evolve="1", scatter="0 1"),
    "theta": _k(_float, "1", ("evolve", "scatter")),
    "t0": _k(_float, "0", ("evolve",)),
    "t1": _k(_float, "1", ("evolve",)),
    "steps": _k(_pos_int, "1000", ("evolve",)),
    "save_every": _k(_pos_int, "100", ("evolve",)),
    "init": _k(_str, "0 0 0.5 0; 1 0 0 0.25", ("evolve",)),
    "tol.leak": _k(_pos_float, "1e-6", ("evolve", "verify")),
    "tol.drift": _k(_pos_float, "1e-8", ("evolve", "verify")),
    "tol.newton": _k(_pos_float, "1e-8", ("evolve", "verify")),
    "tol.replay": _k(_pos_float, "1e-4", ("evolve", "verify")),
    "soliton.epsilon": _k(_opt_pos_float, "auto", ("evolve",)),
    "quad_order": _k(_pos_int, "4", ("evolve", "scatter")),
    # scattering
    "direction": _k(_choice("plus", "minus"), "plus", ("scatter",)),
    "data": _k(_str, "0 0 0.4 0", ("scatter",)),
    "alpha": _k(_pos_float, "2.5", ("scatter", "verify")),
    "T": _k(_float, "2.5", ("scatter",)),
    "max_picard": _k(_pos_int, "60", ("scatter",)),
    "contraction_tol": _k(_pos_float, "1e-12", ("scatter",)),
    "delta": _k(_pos_float, "1", ("scatter",)),
    "delta0": _k(_opt_pos_float, "auto", ("scatter",)),
    "horizon_cap": _k(_float, "64", ("scatter",)),
    "panel_width": _k(_pos_float, "0.25", ("scatter",)),
    "stability_tol": _k(_pos_float, "1e-2", ("scatter",)),
    "allow_linear": _k(_bool, "false", ("scatter",)),
    "triple": _k(_bool, "false", ("scatter",)),
    "probe.t_min": _k(_pos_float, "10", ("scatter",)),
    "probe.t_max": _k(_pos_float, "100", ("scatter",)),
    # verify
    "trials": _k(_pos_int, "100", ("verify",)),
    "norm.alpha": _k(_pos_float, "3", ("verify",)),
    "norm.N": _k(_pos_int, "12", ("verify",)),
    "jacobi.max_degree": _k(_nonneg_int, "20", ("verify",)),
    "jacobi.max_param": _k(_nonneg_int, "12", ("verify",)),
    "order.N": _k(_pos_int, "48", ("verify",)),
}

_MODES = {"propagator": ("sup_all", "diagonal_only", "fixed"), "scatter": ("wave", "map", "diagonal", "probe")}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw key -> value strings; later lines override earlier ones."""
    out: dict[str, str] = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key = value, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{no}: empty key")
        out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    values: Mapping[str, Any] = field(repr=False)
    raw: Mapping[str, str] = field(repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    @property
    def polynomial(self) -> InteractionPolynomial:
        return InteractionPolynomial.from_string(self.values["F"])

    def echo(self) -> dict[str, str]:
        """Normalised key -> text of every effective setting (``out_dir`` excluded)."""
        return {k: self.raw[k] for k in sorted(self.raw) if k != "out_dir"}

    def hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in self.echo().items())
        return hashlib.sha256(f"{self.command}\n{text}".encode()).hexdigest()[:16]

    def header(self) -> str:
        return f"config_hash={self.hash()} command={self.command}"


def _normalise(raw: str) -> str:
    return " ".join(raw.split())


def load_config(command: str, path: str | Path | None = None, overrides: Iterable[str] = (),
                out_dir: str | None = None) -> ExperimentConfig:
    """Defaults, then the file, then ``key=value`` overrides; validated against the command schema."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    given: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        given.update(parse_config_text(text, str(path)))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (p.strip() for p in item.split("=", 1))
        given[k] = v
    if out_dir is not None:
        given["out_dir"] = out_dir

    unknown = sorted(k for k in given if k not in SCHEMA or command not in SCHEMA[k].defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) for {command}: {', '.join(unknown)}")

    raw: dict[str, str] = {}
    values: dict[str, Any] = {}
    for key, spec in SCHEMA.items():
        if command not in spec.defaults:
            continue
        text = given.get(key, spec.defaults[command])
        try:
            values[key] = spec.parse(text)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"{key} = {text!r}: {exc}") from exc
        raw[key] = _normalise(text)
    _validate(command, values)
    return ExperimentConfig(command, values, raw)


def _validate(command: str, v: dict):
    d, N = v["d"], v["N"]
    if N > MAX_CUTOFF:
        raise ResourceLimitError(f"N={N} exceeds the resource cap {MAX_CUTOFF}")
    if command in _MODES and v["mode"] not in _MODES[command]:
        raise ConfigError(f"mode must be one of {', '.join(_MODES[command])}")
    if command == "propagator":
        if v["mode"] == "fixed" and len(v["fixed"]) != 4:
            raise ConfigError("fixed needs four indices n m k l")
        if np.any(parse_time_grid(v["t_grid"]) < 1):
            raise ConfigError("t_grid must lie in [1, inf)")
    if command == "evolve":
        if v["t1"] <= v["t0"]:
            raise ConfigError("t1 must exceed t0")
    if command == "scatter":
        if v["T"] < 1:
            raise ConfigError("T must be >= 1")
        if v["mode"] in ("wave", "map") and v["alpha"] <= 2 * d:
            raise ConfigError(f"alpha={v['alpha']} must exceed 2d={2 * d} for small-data wave operators")
        if v["mode"] == "probe" and v["probe.t_max"] <= v["probe.t_min"]:
            raise ConfigError("probe.t_max must exceed probe.t_min")
    if command == "verify":
        if v["alpha"] <= 2 * d:
            raise ConfigError(f"alpha={v['alpha']} must exceed 2d={2 * d} for the small-data scattering check")
        if v["norm.alpha"] <= d:
            raise ConfigError("norm.alpha must exceed d")
