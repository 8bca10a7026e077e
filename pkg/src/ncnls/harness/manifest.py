"""Run manifests, check records and CSV output.

``manifest.json`` holds only deterministic content so repeated runs with the
same configuration compare equal; wall-clock timings go to ``timing.json``.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .. import __version__
from .config import ExperimentConfig

__all__ = ["Check", "RunManifest", "write_csv", "MANIFEST_NAME", "TIMING_NAME"]

MANIFEST_NAME = "manifest.json"
TIMING_NAME = "timing.json"


def _plain(x: Any):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return [_plain(x.real), _plain(x.imag)]
    return x


@dataclass
class Check:
    name: str
    passed: bool
    value: Any = None
    threshold: Any = None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" value={_fmt(self.value)}" if self.value is not None else ""
        extra += f" threshold={_fmt(self.threshold)}" if self.threshold is not None else ""
        extra += f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}{extra}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    config: ExperimentConfig
    out_dir: Path
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._started = time.perf_counter()

    def check(self, name: str, passed: bool, value=None, threshold=None, detail: str = "") -> Check:
        c = Check(name, bool(passed), value, threshold, detail)
        self.checks.append(c)
        return c

    def metric(self, name: str, value):
        self.metrics[name] = value

    def artifact(self, path) -> Path:
        path = Path(path)
        self.artifacts.append(path)
        return path

    def path(self, name: str) -> Path:
        """Location for a new artifact, registered in the manifest."""
        p = self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return self.artifact(p)

    def timed(self, label: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                manifest.timings[label] = time.perf_counter() - self.start
                return False

        return _Timer()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        files = []
        for p in sorted(set(self.artifacts), key=lambda q: str(q)):
            rel = p.relative_to(self.out_dir).as_posix() if p.is_relative_to(self.out_dir) else str(p)
            files.append({"file": rel, "sha256": _sha256(p) if p.is_file() else None})
        files.append({"file": TIMING_NAME, "sha256": None})
        return _plain({
            "command": self.config.command,
            "version": __version__,
            "config_hash": self.config.hash(),
            "config": self.config.echo(),
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold, "detail": c.detail}
                for c in self.checks
            ],
            "metrics": dict(sorted(self.metrics.items())),
            "artifacts": files,
        })

    def write(self) -> Path:
        self.timings["total"] = time.perf_counter() - self._started
        timing = {"wall_clock_s": dict(sorted(self.timings.items())),
                  "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
        (self.out_dir / TIMING_NAME).write_text(json.dumps(_plain(timing), indent=2) + "\n")
        path = self.out_dir / MANIFEST_NAME
        path.write_text(json.dumps(self.as_dict(), indent=2) + "\n")
        return path


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], header: str = "") -> Path:
    """Comma-separated with ``#`` comment header lines; floats in round-trip precision."""
    path = Path(path)
    lines = [f"# {ln}" for ln in header.splitlines() if ln] if header else []
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, (float, np.floating)) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
