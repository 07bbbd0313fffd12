"""Small shared helpers: thread cap and deterministic parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Parallelism cap from PRONYKIT_THREADS (default 1 = serial)."""
    raw = os.environ.get("PRONYKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    """Map fn over items, threaded when PRONYKIT_THREADS > 1.

    Results are returned in input order regardless of completion order, so
    output is deterministic as long as fn is deterministic per item.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
