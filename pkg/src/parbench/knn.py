"""Multi-query 2-D k-nearest-neighbor search.

Three interchangeable engines over the same contract:

* ``knn_reference`` — exact selection per query (the oracle),
* ``knn_heap`` — per-query bounded max-heap with replace-root,
* ``knn_buffered`` — sorted top-k list plus a candidate buffer that is
  flushed through a bitonic sort and a bitonic merge whenever it fills.

Distances are squared Euclidean. All orderings use the total order
(distance, index), which makes every result unique and independent of
data order; k must be a power of two with 32 <= k <= 1024.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InsufficientDataError, ParameterError
from .parallel import chunk_ranges, run_workers

K_MIN = 32
K_MAX = 1024
LANES = 32

SENTINEL_INDEX = np.iinfo(np.int64).max


@dataclass(eq=False)
class PointCloud:
    """Finite 2-D points; a point's identity is its array position."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ParameterError(f"points must have shape (n, 2), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ParameterError("point cloud must contain at least one point")
        if not np.isfinite(pts).all():
            raise ParameterError("point coordinates must be finite")
        self.points = pts

    def __len__(self):
        return self.points.shape[0]

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]


@dataclass(eq=False)
class NeighborList:
    """Top-k result for one query: (index, squared distance) pairs sorted
    ascending by (distance, index)."""

    k: int
    indices: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        check_k(self.k)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.distances = np.ascontiguousarray(self.distances, dtype=np.float64)
        if self.indices.shape != (self.k,) or self.distances.shape != (self.k,):
            raise ParameterError("entry arrays must have length k")
        if self.indices.min(initial=0) < 0:
            raise ParameterError("indices must be non-negative")
        if np.unique(self.indices).size != self.k:
            raise ParameterError("indices must be distinct")
        d, i = self.distances, self.indices
        if not _is_sorted_lex(d, i):
            raise ParameterError("entries must be sorted ascending by (distance, index)")


@dataclass(frozen=True)
class LanePartitionView:
    """The 32-run decomposition of a sorted top-k list: run t covers
    positions [t*k/32, (t+1)*k/32)."""

    k: int
    run_length: int
    bounds: tuple


class CandidateBuffer:
    """Unordered staging area for points that beat the current k-th entry.

    Callers must flush (sort + merge) when the buffer reports full; insert
    on a full buffer is an error.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ParameterError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.fill = 0
        self.distances = np.full(capacity, np.inf)
        self.indices = np.full(capacity, SENTINEL_INDEX, dtype=np.int64)

    def insert(self, distance: float, index: int) -> None:
        if self.fill >= self.capacity:
            raise ParameterError("insert into a full candidate buffer")
        self.distances[self.fill] = distance
        self.indices[self.fill] = index
        self.fill += 1

    @property
    def full(self) -> bool:
        return self.fill == self.capacity

    def padded(self):
        """Copies of the entry arrays, sentinel-padded to capacity."""
        d = self.distances.copy()
        i = self.indices.copy()
        d[self.fill :] = np.inf
        i[self.fill :] = SENTINEL_INDEX
        return d, i

    def reset(self) -> None:
        self.fill = 0


def _is_sorted_lex(d, i):
    if d.size <= 1:
        return True
    later = d[1:]
    earlier = d[:-1]
    bad = (later < earlier) | ((later == earlier) & (i[1:] <= i[:-1]))
    return not bad.any()


def check_k(k) -> None:
    if not isinstance(k, (int, np.integer)) or k < K_MIN or k > K_MAX or k & (k - 1):
        raise ParameterError(
            f"k must be a power of two with {K_MIN} <= k <= {K_MAX}, got {k!r}"
        )


def _as_cloud(obj) -> PointCloud:
    return obj if isinstance(obj, PointCloud) else PointCloud(np.asarray(obj))


# ---------------------------------------------------------------------------
# bitonic network


def bitonic_network_size(length: int) -> int:
    """Closed-form compare-exchange count of the sorting network."""
    stages = int(math.log2(length))
    return (length // 2) * stages * (stages + 1) // 2


@njit(cache=True, nogil=True, inline="always")
def _lex_less(d1, i1, d2, i2):
    return d1 < d2 or (d1 == d2 and i1 < i2)


@njit(cache=True, nogil=True)
def _bitonic_sort_core(d, idx, descending):
    # standard XOR-partner bitonic network; returns compare-exchange count
    n = d.size
    count = 0
    size = 2
    while size <= n:
        stride = size >> 1
        while stride >= 1:
            for t in range(n):
                p = t ^ stride
                if p > t:
                    count += 1
                    ascending = (t & size) == 0
                    if descending:
                        ascending = not ascending
                    if ascending:
                        swap = _lex_less(d[p], idx[p], d[t], idx[t])
                    else:
                        swap = _lex_less(d[t], idx[t], d[p], idx[p])
                    if swap:
                        d[t], d[p] = d[p], d[t]
                        idx[t], idx[p] = idx[p], idx[t]
            stride >>= 1
        size <<= 1
    return count


@njit(cache=True, nogil=True)
def _merge_topk_core(td, ti, bd, bi):
    # both halves ascending; keeps the k smallest in (td, ti), sorted.
    # reversing one input makes the pair bitonic, the stride-k exchange
    # leaves a bitonic lower half, and the descent sorts it.
    k = td.size
    for t in range(k):
        j = k - 1 - t
        if _lex_less(bd[j], bi[j], td[t], ti[t]):
            td[t], bd[j] = bd[j], td[t]
            ti[t], bi[j] = bi[j], ti[t]
    stride = k >> 1
    while stride >= 1:
        for t in range(k):
            p = t ^ stride
            if p > t and _lex_less(td[p], ti[p], td[t], ti[t]):
                td[t], td[p] = td[p], td[t]
                ti[t], ti[p] = ti[p], ti[t]
        stride >>= 1


def _check_pow2(length) -> None:
    if length < 1 or length & (length - 1):
        raise ParameterError(f"length must be a power of two, got {length}")


def bitonic_sort(distances, indices=None, descending: bool = False):
    """Sort (distance, index) entries with the bitonic network.

    Returns sorted copies ``(distances, indices)``. The length must be a
    power of two. When ``indices`` is omitted, positions 0..n-1 are used.
    """
    d, i, _ = bitonic_sort_counted(distances, indices, descending)
    return d, i


def bitonic_sort_counted(distances, indices=None, descending: bool = False):
    """Like ``bitonic_sort`` but also returns the compare-exchange count."""
    d = np.array(distances, dtype=np.float64, copy=True)
    if d.ndim != 1:
        raise ParameterError("entries must form a 1-D array")
    _check_pow2(d.size)
    if indices is None:
        i = np.arange(d.size, dtype=np.int64)
    else:
        i = np.array(indices, dtype=np.int64, copy=True)
        if i.shape != d.shape:
            raise ParameterError("indices and distances must have the same length")
    count = _bitonic_sort_core(d, i, descending)
    return d, i, int(count)


def merge_topk(topk: NeighborList, batch_distances, batch_indices) -> NeighborList:
    """Bitonic-merge a sorted batch of k entries into a sorted top-k list.

    Result holds the k smallest of the 2k entries, equal to sorting the
    concatenation and truncating.
    """
    bd = np.array(batch_distances, dtype=np.float64, copy=True)
    bi = np.array(batch_indices, dtype=np.int64, copy=True)
    if bd.shape != (topk.k,) or bi.shape != (topk.k,):
        raise ParameterError(
            f"batch must contain exactly k={topk.k} entries, got {bd.shape}"
        )
    if not _is_sorted_lex(bd, bi):
        raise ParameterError("batch must be sorted ascending by (distance, index)")
    td = topk.distances.copy()
    ti = topk.indices.copy()
    _merge_topk_core(td, ti, bd, bi)
    return NeighborList(topk.k, ti, td)


def validate_lane_partition(nl: NeighborList) -> LanePartitionView:
    """Decompose a top-k list into the 32 consecutive lane runs.

    Always succeeds for a valid list: k >= 32 is a power of two, so the
    run length k/32 divides evenly.
    """
    run = nl.k // LANES
    bounds = tuple((t * run, (t + 1) * run) for t in range(LANES))
    assert bounds[-1][1] == nl.k
    joined_i = np.concatenate([nl.indices[a:b] for a, b in bounds])
    joined_d = np.concatenate([nl.distances[a:b] for a, b in bounds])
    assert np.array_equal(joined_i, nl.indices)
    assert np.array_equal(joined_d, nl.distances)
    return LanePartitionView(nl.k, run, bounds)


# ---------------------------------------------------------------------------
# engines


def _validate_instance(data, queries, k):
    data = _as_cloud(data)
    queries = _as_cloud(queries)
    check_k(k)
    if len(data) < k:
        raise InsufficientDataError(
            f"need at least k={k} data points, got {len(data)}"
        )
    return data, queries


def _wrap_results(k, idx_mat, dist_mat):
    return [NeighborList(k, idx_mat[q], dist_mat[q]) for q in range(idx_mat.shape[0])]


def knn_reference(data, queries, k: int) -> list:
    """Exact top-k per query: select by the k-th distance, then order the
    candidates by (distance, index)."""
    data, queries = _validate_instance(data, queries, k)
    dx, dy = data.x, data.y
    out_i = np.empty((len(queries), k), dtype=np.int64)
    out_d = np.empty((len(queries), k), dtype=np.float64)
    for q in range(len(queries)):
        qx, qy = queries.points[q]
        d = (dx - qx) ** 2 + (dy - qy) ** 2
        kth = np.partition(d, k - 1)[k - 1]
        cand = np.flatnonzero(d <= kth)
        order = np.lexsort((cand, d[cand]))[:k]
        sel = cand[order]
        out_i[q] = sel
        out_d[q] = d[sel]
    return _wrap_results(k, out_i, out_d)


@njit(cache=True, nogil=True, inline="always")
def _sift_down(hd, hi, root, size):
    # max-heap by (distance, index)
    while True:
        child = 2 * root + 1
        if child >= size:
            return
        if child + 1 < size and _lex_less(hd[child], hi[child], hd[child + 1], hi[child + 1]):
            child += 1
        if _lex_less(hd[root], hi[root], hd[child], hi[child]):
            hd[root], hd[child] = hd[child], hd[root]
            hi[root], hi[child] = hi[child], hi[root]
            root = child
        else:
            return


@njit(cache=True, nogil=True)
def _heap_kernel(dx, dy, qpts, k, out_d, out_i, q0, q1):
    n = dx.size
    for q in range(q0, q1):
        qx = qpts[q, 0]
        qy = qpts[q, 1]
        hd = out_d[q]
        hi = out_i[q]
        # fill with the first k points, sifting up
        for p in range(k):
            ddx = dx[p] - qx
            ddy = dy[p] - qy
            hd[p] = ddx * ddx + ddy * ddy
            hi[p] = p
            c = p
            while c > 0:
                parent = (c - 1) >> 1
                if _lex_less(hd[parent], hi[parent], hd[c], hi[c]):
                    hd[parent], hd[c] = hd[c], hd[parent]
                    hi[parent], hi[c] = hi[c], hi[parent]
                    c = parent
                else:
                    break
        # stream the rest: replace the root when a closer point arrives
        for p in range(k, n):
            ddx = dx[p] - qx
            ddy = dy[p] - qy
            d = ddx * ddx + ddy * ddy
            if _lex_less(d, p, hd[0], hi[0]):
                hd[0] = d
                hi[0] = p
                _sift_down(hd, hi, 0, k)
        # heapsort in place -> ascending by (distance, index)
        for end in range(k - 1, 0, -1):
            hd[0], hd[end] = hd[end], hd[0]
            hi[0], hi[end] = hi[end], hi[0]
            _sift_down(hd, hi, 0, end)


def knn_heap(data, queries, k: int, workers: int = 1) -> list:
    """Per-query bounded max-heap; equals the reference after the final sort."""
    data, queries = _validate_instance(data, queries, k)
    m = len(queries)
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k), dtype=np.float64)
    ranges = chunk_ranges(m, workers)

    def work(w):
        q0, q1 = ranges[w]
        if q0 < q1:
            _heap_kernel(data.x, data.y, queries.points, k, out_d, out_i, q0, q1)

    run_workers(work, workers)
    return _wrap_results(k, out_i, out_d)


@njit(cache=True, nogil=True)
def _buffered_kernel(
    dx, dy, qpts, k, batch, out_d, out_i, q0, q1, thresholds, merge_counts, record
):
    n = dx.size
    sentinel = np.int64(SENTINEL_INDEX)
    buf_d = np.empty(k, dtype=np.float64)
    buf_i = np.empty(k, dtype=np.int64)
    scratch = np.empty(batch, dtype=np.float64)
    for q in range(q0, q1):
        qx = qpts[q, 0]
        qy = qpts[q, 1]
        td = out_d[q]
        ti = out_i[q]
        td[:] = np.inf
        ti[:] = sentinel
        th_d = np.inf
        th_i = sentinel
        fill = 0
        merges = 0
        pos = 0
        while pos < n:
            stop = min(n, pos + batch)
            for p in range(pos, stop):
                ddx = dx[p] - qx
                ddy = dy[p] - qy
                scratch[p - pos] = ddx * ddx + ddy * ddy
            for p in range(pos, stop):
                d = scratch[p - pos]
                # admit only points beating the current k-th entry
                if _lex_less(d, p, th_d, th_i):
                    buf_d[fill] = d
                    buf_i[fill] = p
                    fill += 1
                    if fill == k:
                        _bitonic_sort_core(buf_d, buf_i, False)
                        _merge_topk_core(td, ti, buf_d, buf_i)
                        th_d = td[k - 1]
                        th_i = ti[k - 1]
                        fill = 0
                        if record:
                            thresholds[q, merges] = th_d
                        merges += 1
            pos = stop
        if fill > 0:
            for t in range(fill, k):
                buf_d[t] = np.inf
                buf_i[t] = sentinel
            _bitonic_sort_core(buf_d, buf_i, False)
            _merge_topk_core(td, ti, buf_d, buf_i)
            if record:
                thresholds[q, merges] = td[k - 1]
            merges += 1
        merge_counts[q] = merges


def knn_buffered(
    data,
    queries,
    k: int,
    batch_size: int = None,
    workers: int = 1,
    record_thresholds: bool = False,
):
    """Sorted top-k with a candidate buffer, flushed by bitonic sort + merge.

    ``batch_size`` controls how many data points are loaded and distanced
    per round (default k). With ``record_thresholds`` the return value is
    ``(results, thresholds)`` where ``thresholds[q]`` lists the k-th
    distance after each merge of query q.
    """
    data, queries = _validate_instance(data, queries, k)
    if batch_size is None:
        batch_size = k
    if not isinstance(batch_size, (int, np.integer)) or batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size!r}")
    batch_size = int(min(batch_size, len(data)))
    m = len(queries)
    out_i = np.empty((m, k), dtype=np.int64)
    out_d = np.empty((m, k), dtype=np.float64)
    max_merges = len(data) // k + 2
    if record_thresholds:
        thresholds = np.full((m, max_merges), np.nan)
    else:
        thresholds = np.empty((1, 1))
    merge_counts = np.zeros(m, dtype=np.int64)
    ranges = chunk_ranges(m, workers)

    def work(w):
        q0, q1 = ranges[w]
        if q0 < q1:
            _buffered_kernel(
                data.x, data.y, queries.points, k, batch_size,
                out_d, out_i, q0, q1, thresholds, merge_counts, record_thresholds,
            )

    run_workers(work, workers)
    results = _wrap_results(k, out_i, out_d)
    if record_thresholds:
        per_query = [thresholds[q, : merge_counts[q]].copy() for q in range(m)]
        return results, per_query
    return results


def _buffered_single_query_py(data: PointCloud, qx: float, qy: float, k: int, batch_size: int):
    """Readable twin of the buffered kernel built from the public pieces.

    Used by tests to pin down buffer semantics (flush-when-full, sentinel
    padding, threshold tightening) at small scale.
    """
    n = len(data)
    td = np.full(k, np.inf)
    ti = np.full(k, SENTINEL_INDEX, dtype=np.int64)
    buf = CandidateBuffer(k)
    th_d, th_i = np.inf, SENTINEL_INDEX
    for pos in range(0, n, batch_size):
        stop = min(n, pos + batch_size)
        dxs = data.x[pos:stop] - qx
        dys = data.y[pos:stop] - qy
        dists = dxs * dxs + dys * dys
        for p in range(pos, stop):
            d = dists[p - pos]
            if d < th_d or (d == th_d and p < th_i):
                buf.insert(d, p)
                if buf.full:
                    bd, bi = buf.padded()
                    bd, bi = bitonic_sort(bd, bi)
                    _merge_topk_core(td, ti, bd, bi)
                    th_d, th_i = td[k - 1], ti[k - 1]
                    buf.reset()
    if buf.fill:
        bd, bi = buf.padded()
        bd, bi = bitonic_sort(bd, bi)
        _merge_topk_core(td, ti, bd, bi)
    return ti, td


def format_neighbor_lists(results) -> str:
    """Deterministic text form: a header per query, then one
    ``<index><TAB><distance>`` line per entry in full precision."""
    lines = []
    for q, nl in enumerate(results):
        lines.append(f"q={q} k={nl.k}:")
        for i in range(nl.k):
            lines.append(f"{nl.indices[i]}\t{float(nl.distances[i])!r}")
    return "\n".join(lines) + "\n"
