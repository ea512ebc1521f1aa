"""Worker-pool plumbing shared by the engines.

Workers are plain threads; every kernel they call releases the GIL
(numba ``nogil``), so partitioned work runs concurrently. Results must
never depend on the worker count: workers only ever write disjoint
slices of the output.
"""

from concurrent.futures import ThreadPoolExecutor

from .errors import ParameterError


def check_workers(workers):
    if not isinstance(workers, int) or workers < 1:
        raise ParameterError(f"workers must be a positive integer, got {workers!r}")


def run_workers(fn, workers):
    """Invoke ``fn(worker_id)`` for each worker id, concurrently if workers > 1."""
    check_workers(workers)
    if workers == 1:
        fn(0)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, w) for w in range(workers)]
        for fut in futures:
            fut.result()


def chunk_ranges(n, workers):
    """Split [0, n) into ``workers`` contiguous ranges (some possibly empty)."""
    chunk = -(-n // workers) if n else 0
    out = []
    for w in range(workers):
        start = min(n, w * chunk)
        stop = min(n, start + chunk)
        out.append((start, stop))
    return out
