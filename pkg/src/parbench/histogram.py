"""Character-range histogram variants.

The ladder runs from a deliberately contended baseline (every worker
atomically increments one shared bin array) through worker-private
copies, multi-item iteration patterns, and finally a 32-copy layout
where bin i of copy c lives at flat offset ``i*32 + c``. Every variant
must reproduce ``histogram_reference`` bit-exactly for any input,
worker count, item granularity and pattern.
"""

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._atomics import atomic_add_u64
from .errors import ParameterError
from .parallel import chunk_ranges, check_workers, run_workers


@dataclass(frozen=True)
class CharRange:
    """Inclusive byte-value range [from_value, to_value]."""

    from_value: int
    to_value: int

    def __post_init__(self):
        if not (0 <= self.from_value <= self.to_value <= 255):
            raise ParameterError(
                f"need 0 <= from <= to <= 255, got [{self.from_value}, {self.to_value}]"
            )

    @property
    def bin_count(self) -> int:
        return self.to_value - self.from_value + 1


@dataclass(eq=False)
class Histogram:
    char_range: CharRange
    bins: np.ndarray

    def __post_init__(self):
        self.bins = np.ascontiguousarray(self.bins, dtype=np.uint64)
        if self.bins.shape != (self.char_range.bin_count,):
            raise ParameterError(
                f"expected {self.char_range.bin_count} bins, got shape {self.bins.shape}"
            )

    def equals(self, other) -> bool:
        return self.char_range == other.char_range and np.array_equal(self.bins, other.bins)


class IterationPattern(enum.Enum):
    """How a worker walks its share of the input.

    CONTIGUOUS_BLOCK: each worker owns one contiguous slice and walks it
    in items_per_worker chunks. WORKER_STRIDE: worker w starts at
    w*items_per_worker and jumps by workers*items_per_worker, taking
    items_per_worker items per stop. Both cover every index exactly once.
    """

    CONTIGUOUS_BLOCK = "block"
    WORKER_STRIDE = "stride"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise ParameterError(
            f"unknown iteration pattern {value!r}; known: "
            f"{', '.join(m.value for m in cls)}"
        )


COPIES = 32


class MultiCopyLayout:
    """32 histogram copies in one flat array, strided so that bin i of
    copy c sits at offset ``i*32 + c``."""

    def __init__(self, bin_count: int):
        if bin_count < 1:
            raise ParameterError(f"bin_count must be >= 1, got {bin_count}")
        self.bin_count = bin_count
        self.storage = np.zeros(COPIES * bin_count, dtype=np.uint64)

    @staticmethod
    def offset(bin_index: int, copy: int) -> int:
        return bin_index * COPIES + copy

    def add(self, bin_index: int, copy: int, amount: int = 1) -> None:
        self.storage[self.offset(bin_index, copy)] += np.uint64(amount)

    def reduce(self) -> np.ndarray:
        """Sum the copies bin-by-bin into a plain histogram array."""
        return self.storage.reshape(self.bin_count, COPIES).sum(axis=1, dtype=np.uint64)


def as_byte_array(text) -> np.ndarray:
    """View text (bytes-like or uint8 array) as a contiguous uint8 array."""
    if isinstance(text, np.ndarray):
        if text.dtype != np.uint8 or text.ndim != 1:
            raise ParameterError("text array must be 1-D uint8")
        return np.ascontiguousarray(text)
    return np.frombuffer(bytes(text), dtype=np.uint8)


# ---------------------------------------------------------------------------
# kernels

_BLOCK = 0
_STRIDE = 1


@njit(cache=True, nogil=True)
def _count_atomic(text, lo, hi, bins, start, stop):
    for i in range(start, stop):
        c = text[i]
        if lo <= c <= hi:
            atomic_add_u64(bins, np.intp(c - lo), np.uint64(1))


@njit(cache=True, nogil=True)
def _count_private(text, lo, hi, priv, start, stop):
    for i in range(start, stop):
        c = text[i]
        if lo <= c <= hi:
            priv[c - lo] += np.uint64(1)


@njit(cache=True, nogil=True)
def _merge_all(shared, priv):
    for i in range(priv.size):
        atomic_add_u64(shared, i, priv[i])


@njit(cache=True, nogil=True)
def _merge_skip_zero(shared, priv):
    # bins that stayed zero skip the atomic add entirely
    for i in range(priv.size):
        v = priv[i]
        if v != np.uint64(0):
            atomic_add_u64(shared, i, v)


@njit(cache=True, nogil=True)
def _count_multiitem(text, lo, hi, priv, worker, workers, items, pattern):
    n = text.size
    if pattern == 0:  # contiguous block
        chunk = (n + workers - 1) // workers
        start = min(n, worker * chunk)
        stop = min(n, start + chunk)
        pos = start
        while pos < stop:
            end = min(stop, pos + items)
            for i in range(pos, end):
                c = text[i]
                if lo <= c <= hi:
                    priv[c - lo] += np.uint64(1)
            pos = end
    else:  # worker stride
        stride = workers * items
        base = worker * items
        while base < n:
            end = min(n, base + items)
            for i in range(base, end):
                c = text[i]
                if lo <= c <= hi:
                    priv[c - lo] += np.uint64(1)
            base += stride


@njit(cache=True, nogil=True)
def _count_multicopy(text, lo, hi, storage, copy, worker, workers, items, pattern):
    n = text.size
    if pattern == 0:
        chunk = (n + workers - 1) // workers
        start = min(n, worker * chunk)
        stop = min(n, start + chunk)
        pos = start
        while pos < stop:
            end = min(stop, pos + items)
            for i in range(pos, end):
                c = text[i]
                if lo <= c <= hi:
                    atomic_add_u64(storage, np.intp((c - lo) * 32 + copy), np.uint64(1))
            pos = end
    else:
        stride = workers * items
        base = worker * items
        while base < n:
            end = min(n, base + items)
            for i in range(base, end):
                c = text[i]
                if lo <= c <= hi:
                    atomic_add_u64(storage, np.intp((c - lo) * 32 + copy), np.uint64(1))
            base += stride


# ---------------------------------------------------------------------------
# variants


def histogram_reference(text, char_range: CharRange) -> Histogram:
    """Sequential oracle: bin i counts bytes equal to from_value + i."""
    arr = as_byte_array(text)
    counts = np.bincount(arr, minlength=256).astype(np.uint64)
    return Histogram(char_range, counts[char_range.from_value : char_range.to_value + 1])


def histogram_shared_atomic(text, char_range: CharRange, workers: int = 1) -> Histogram:
    """Baseline: all workers atomically increment one shared bin array.

    Deliberately contended; this is the speedup baseline, not a mistake.
    """
    arr = as_byte_array(text)
    check_workers(workers)
    bins = np.zeros(char_range.bin_count, dtype=np.uint64)
    ranges = chunk_ranges(arr.size, workers)

    def work(w):
        start, stop = ranges[w]
        if start < stop:
            _count_atomic(arr, char_range.from_value, char_range.to_value, bins, start, stop)

    run_workers(work, workers)
    return Histogram(char_range, bins)


def histogram_privatized(
    text, char_range: CharRange, workers: int = 1, skip_zero_merge: bool = True
) -> Histogram:
    """Each worker counts into a private copy, merged into the shared
    result once at the end (zero bins skip the atomic add by default)."""
    arr = as_byte_array(text)
    check_workers(workers)
    shared = np.zeros(char_range.bin_count, dtype=np.uint64)
    merge = _merge_skip_zero if skip_zero_merge else _merge_all
    ranges = chunk_ranges(arr.size, workers)

    def work(w):
        start, stop = ranges[w]
        priv = np.zeros(char_range.bin_count, dtype=np.uint64)
        if start < stop:
            _count_private(arr, char_range.from_value, char_range.to_value, priv, start, stop)
        merge(shared, priv)

    run_workers(work, workers)
    return Histogram(char_range, shared)


def histogram_multiitem(
    text,
    char_range: CharRange,
    workers: int = 1,
    items_per_worker: int = 1,
    pattern=IterationPattern.CONTIGUOUS_BLOCK,
) -> Histogram:
    """Privatized counting where each worker takes items_per_worker items
    per round, in either iteration pattern; ragged tails are covered
    exactly once."""
    arr = as_byte_array(text)
    check_workers(workers)
    pattern = IterationPattern.parse(pattern)
    if not isinstance(items_per_worker, int) or items_per_worker < 1:
        raise ParameterError(f"items_per_worker must be >= 1, got {items_per_worker!r}")
    shared = np.zeros(char_range.bin_count, dtype=np.uint64)
    code = _BLOCK if pattern is IterationPattern.CONTIGUOUS_BLOCK else _STRIDE

    def work(w):
        priv = np.zeros(char_range.bin_count, dtype=np.uint64)
        _count_multiitem(
            arr, char_range.from_value, char_range.to_value,
            priv, w, workers, items_per_worker, code,
        )
        _merge_skip_zero(shared, priv)

    run_workers(work, workers)
    return Histogram(char_range, shared)


def histogram_multicopy(
    text,
    char_range: CharRange,
    workers: int = 1,
    items_per_worker: int = 1,
    pattern=IterationPattern.CONTIGUOUS_BLOCK,
) -> Histogram:
    """Worker w counts into copy (w mod 32) of the strided 32-copy layout;
    the copies are reduced bin-by-bin at the end."""
    arr = as_byte_array(text)
    check_workers(workers)
    pattern = IterationPattern.parse(pattern)
    if not isinstance(items_per_worker, int) or items_per_worker < 1:
        raise ParameterError(f"items_per_worker must be >= 1, got {items_per_worker!r}")
    layout = MultiCopyLayout(char_range.bin_count)
    code = _BLOCK if pattern is IterationPattern.CONTIGUOUS_BLOCK else _STRIDE

    def work(w):
        _count_multicopy(
            arr, char_range.from_value, char_range.to_value,
            layout.storage, w % COPIES, w, workers, items_per_worker, code,
        )

    run_workers(work, workers)
    return Histogram(char_range, layout.reduce())


def format_histogram(hist: Histogram) -> str:
    """One ``<byteValue><TAB><count>`` line per bin, byte values ascending."""
    lines = [
        f"{hist.char_range.from_value + i}\t{int(hist.bins[i])}"
        for i in range(hist.char_range.bin_count)
    ]
    return "\n".join(lines) + "\n"
