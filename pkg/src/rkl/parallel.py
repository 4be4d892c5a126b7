"""Ordered thread-pool mapping capped by the ``RKL_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_info, threadpool_limits


def worker_count() -> int:
    raw = os.environ.get("RKL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(func, items) -> list:
    """``[func(x) for x in items]``, run on up to ``RKL_THREADS`` threads.

    Results keep input order, so reports do not depend on scheduling.
    """
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def blas_limits():
    """Context manager capping native BLAS pools at ``RKL_THREADS``.

    Pools are only ever lowered: asking OpenBLAS for more threads than it was
    initialised with is unsafe.
    """
    current = [info["num_threads"] for info in threadpool_info()]
    return threadpool_limits(limits=min([worker_count(), *current]))
