"""Thread-pool helpers honouring the ``BGBM_THREADS`` environment variable.

Work items are mapped in submission order and results are collected by
index, so the output never depends on scheduling.  Reductions over the
collected arrays should use numpy (pairwise summation), which is likewise
order-stable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """Worker cap: ``BGBM_THREADS`` when set to a positive integer, else all cores."""
    raw = os.environ.get("BGBM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(fn, items, threads: int | None = None) -> list:
    """Apply ``fn`` over ``items``, preserving input order in the result list."""
    if threads is None:
        threads = thread_count()
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
