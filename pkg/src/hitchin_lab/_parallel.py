import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "HITCHIN_LAB_THREADS"


def max_workers():
    """Worker cap from ``HITCHIN_LAB_THREADS`` (default: all cores)."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Order-preserving map; results never depend on scheduling."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
