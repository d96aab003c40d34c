"""Worker-count resolution and a deterministic chunked thread map.

Chunk boundaries are a pure function of the problem size, never of the worker
count, so outputs are identical for any number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["resolve_workers", "chunk_ranges", "thread_map"]

ENV_WORKERS = "DBAR_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        w = int(workers)
    elif os.environ.get(ENV_WORKERS):
        w = int(os.environ[ENV_WORKERS])
    else:
        w = min(os.cpu_count() or 1, 8)
    if w < 1:
        raise ValueError("workers must be >= 1")
    return w


def chunk_ranges(total: int, size: int) -> list[tuple[int, int]]:
    return [(i, min(i + size, total)) for i in range(0, total, size)]


def thread_map(fn, items, workers: int):
    """Ordered map over items; numpy work inside fn releases the GIL."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
