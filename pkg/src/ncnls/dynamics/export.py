"""Trajectory export: one snapshot per saved time plus an index CSV."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..fock import write_snapshot
from .flow import Trajectory

__all__ = ["write_trajectory", "read_trajectory_index"]


def write_trajectory(traj: Trajectory, out_dir, prefix: str = "state", header: str = "") -> Path:
    """Write ``<prefix>_<i>.txt`` snapshots and ``trajectory.csv`` with columns t,filename,l2norm,drift.

    drift is the relative change of the l2 norm against the first saved state.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    norms = traj.norms()
    ref = norms[0] if norms[0] > 0 else 1.0
    width = len(str(len(traj.states) - 1))
    lines = [f"# {header}"] if header else []
    lines.append("t,filename,l2norm,drift")
    for i, (t, state, nrm) in enumerate(zip(traj.times, traj.states, norms)):
        name = f"{prefix}_{i:0{width}d}.txt"
        write_snapshot(out / name, state)
        lines.append(f"{t:.17g},{name},{nrm:.17g},{(nrm - norms[0]) / ref:.17g}")
    index = out / "trajectory.csv"
    index.write_text("\n".join(lines) + "\n")
    return index


def read_trajectory_index(path) -> np.ndarray:
    """Rows of (t, l2norm, drift) from an index CSV."""
    rows = [ln.split(",") for ln in Path(path).read_text().splitlines() if ln and not ln.startswith(("#", "t,"))]
    return np.array([[float(r[0]), float(r[2]), float(r[3])] for r in rows])
