"""Thread-count policy shared by the table builder and the evolvers."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "NCNLS_THREADS"


def thread_count(default: int | None = None) -> int:
    """Worker count: NCNLS_THREADS if set, else ``default`` or the CPU count."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            val = int(raw)
        except ValueError as exc:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}") from exc
        if val < 1:
            raise ValueError(f"{ENV_THREADS} must be a positive integer, got {raw!r}")
        return val
    return default or os.cpu_count() or 1


def parallel_map(fn, items, workers: int | None = None):
    """Ordered map; runs inline when one worker is allowed."""
    items = list(items)
    workers = min(workers or thread_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
