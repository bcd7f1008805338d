"""Deterministic thread-pool helpers for grid-style workloads.

Workers write into disjoint slices of preallocated arrays, so results are
identical for any thread count.  ``PSPIN_THREADS`` overrides the
requested worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def effective_threads(threads: int | None) -> int:
    env = os.environ.get("PSPIN_THREADS")
    if env is not None:
        threads = int(env)
    if threads is None or threads <= 0:
        threads = os.cpu_count() or 1
    return max(1, threads)


def map_index_chunks(work, n: int, threads: int | None, min_chunk: int = 1) -> None:
    """Call ``work(slice)`` over a partition of range(n), possibly in parallel."""
    workers = effective_threads(threads)
    chunk = max(min_chunk, -(-n // max(1, 4 * workers)))
    slices = [slice(start, min(start + chunk, n)) for start in range(0, n, chunk)]
    if workers == 1 or len(slices) == 1:
        for sl in slices:
            work(sl)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, slices))
