"""Deterministic fan-out over indexed tasks.

Every task owns its RNG stream through its index, and results come back in
index order, so output is byte-identical for any worker count. The
``BRIDGEDIAG_THREADS`` environment variable caps the pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV_VAR = "BRIDGEDIAG_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is not None:
        try:
            n = int(raw)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


def ordered_map(fn, count: int) -> list:
    """[fn(0), ..., fn(count-1)] evaluated on the worker pool, in index order."""
    workers = worker_count()
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        return list(pool.map(fn, range(count)))
