"""Variant registry: binds each kernel variant to its ladder stage label.

Stage labels name the rungs of each task's optimization ladder (His1-His7,
GoL1-GoL6 plus GoL2-tiled, kNN1-kNN8); reports order rows by them. Every
registered variant has a runnable entry point and is checked against the
task oracle before timing.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RegistryError
from .gol import VARIANT_STEPS, encode_grid, run_iterations, to_byte_grid
from .histogram import (
    IterationPattern,
    histogram_multicopy,
    histogram_multiitem,
    histogram_privatized,
    histogram_reference,
    histogram_shared_atomic,
)
from .knn import knn_buffered, knn_heap, knn_reference

TASKS = ("histogram", "gol", "knn")


@dataclass(frozen=True)
class VariantDescriptor:
    task: str
    name: str
    stage: str
    summary: str
    flags: tuple
    runner: object = field(repr=False)
    prepare: object = field(default=None, repr=False)

    def prepared(self, inputs):
        return self.prepare(inputs) if self.prepare else inputs


def stage_sort_key(stage: str):
    if stage == "oracle":
        return (0, 0, 0)
    m = re.fullmatch(r"[A-Za-z]+(\d+)(-tiled)?", stage)
    if not m:
        return (2, 0, 0)
    return (1, int(m.group(1)), 1 if m.group(2) else 0)


# ---------------------------------------------------------------------------
# runners


def _hist_oracle(inputs, params):
    return histogram_reference(inputs["text"], inputs["char_range"])


def _hist_atomic(inputs, params):
    return histogram_shared_atomic(
        inputs["text"], inputs["char_range"], workers=params.get("workers", 1)
    )


def _hist_private(skip_zero):
    def run(inputs, params):
        return histogram_privatized(
            inputs["text"],
            inputs["char_range"],
            workers=params.get("workers", 1),
            skip_zero_merge=skip_zero,
        )

    return run


def _hist_multi(fn, pattern):
    def run(inputs, params):
        requested = params.get("pattern")
        if requested is not None and IterationPattern.parse(requested) is not pattern:
            raise ParameterError(
                f"this variant is fixed to the {pattern.value!r} pattern; "
                f"--pattern {requested!r} contradicts it"
            )
        return fn(
            inputs["text"],
            inputs["char_range"],
            workers=params.get("workers", 1),
            items_per_worker=params.get("items_per_worker") or 1,
            pattern=pattern,
        )

    return run


def _gol_prepare(variant):
    encoding = VARIANT_STEPS[variant][0]

    def prep(inputs):
        return {"grid": encode_grid(inputs["grid"], encoding), "iters": inputs["iters"]}

    return prep


def _gol_runner(variant):
    def run(inputs, params):
        return run_iterations(
            inputs["grid"], inputs["iters"], variant, workers=params.get("workers", 1)
        )

    return run


def _knn_oracle(inputs, params):
    return knn_reference(inputs["data"], inputs["queries"], inputs["k"])


def _knn_heap(inputs, params):
    return knn_heap(
        inputs["data"], inputs["queries"], inputs["k"], workers=params.get("workers", 1)
    )


def _knn_buffered(inputs, params):
    return knn_buffered(
        inputs["data"],
        inputs["queries"],
        inputs["k"],
        batch_size=inputs.get("batch_size") or inputs["k"],
        workers=params.get("workers", 1),
    )


def _hist_text_flags(*extra):
    return ("--bytes", "--text", "--range-from", "--range-to", "--workers") + extra


_MULTI_FLAGS = ("--items-per-worker", "--pattern")


_GOL_FLAGS = ("--width", "--height", "--density", "--iters", "--workers")
_KNN_FLAGS = ("--n", "--m", "--k", "--workers")

VARIANTS = (
    VariantDescriptor(
        "histogram", "oracle", "oracle",
        "sequential bincount oracle", _hist_text_flags(), _hist_oracle,
    ),
    VariantDescriptor(
        "histogram", "atomic", "His1",
        "one shared bin array, atomic increment per input byte",
        _hist_text_flags(), _hist_atomic,
    ),
    VariantDescriptor(
        "histogram", "private", "His2",
        "per-worker private bins, full merge at the end",
        _hist_text_flags(), _hist_private(False),
    ),
    VariantDescriptor(
        "histogram", "private-skipzero", "His3",
        "per-worker private bins, merge skips zero bins",
        _hist_text_flags(), _hist_private(True),
    ),
    VariantDescriptor(
        "histogram", "multiitem-block", "His4",
        "multiple items per worker over one contiguous slice",
        _hist_text_flags(*_MULTI_FLAGS),
        _hist_multi(histogram_multiitem, IterationPattern.CONTIGUOUS_BLOCK),
    ),
    VariantDescriptor(
        "histogram", "multiitem-stride", "His5",
        "multiple items per worker, worker-strided traversal",
        _hist_text_flags(*_MULTI_FLAGS),
        _hist_multi(histogram_multiitem, IterationPattern.WORKER_STRIDE),
    ),
    VariantDescriptor(
        "histogram", "multicopy-block", "His6",
        "32-copy strided layout (offset i*32+c), contiguous traversal",
        _hist_text_flags(*_MULTI_FLAGS),
        _hist_multi(histogram_multicopy, IterationPattern.CONTIGUOUS_BLOCK),
    ),
    VariantDescriptor(
        "histogram", "multicopy-stride", "His7",
        "32-copy strided layout (offset i*32+c), worker-strided traversal",
        _hist_text_flags(*_MULTI_FLAGS),
        _hist_multi(histogram_multicopy, IterationPattern.WORKER_STRIDE),
    ),
    VariantDescriptor(
        "gol", "oracle", "oracle",
        "rule-level reference step on the byte grid",
        _GOL_FLAGS, _gol_runner("oracle"), _gol_prepare("oracle"),
    ),
    VariantDescriptor(
        "gol", "byte", "GoL1",
        "byte grid baseline, one cell per element",
        _GOL_FLAGS, _gol_runner("byte"), _gol_prepare("byte"),
    ),
    VariantDescriptor(
        "gol", "row-naive", "GoL2",
        "row packing, one bit test per neighbor",
        _GOL_FLAGS, _gol_runner("row-naive"), _gol_prepare("row-naive"),
    ),
    VariantDescriptor(
        "gol", "tile-popc", "GoL2-tiled",
        "8x8 tile packing, popcount over the gathered 3x3 tile halo",
        _GOL_FLAGS, _gol_runner("tile-popc"), _gol_prepare("tile-popc"),
    ),
    VariantDescriptor(
        "gol", "row-popc", "GoL4",
        "row packing, popcount of the per-cell 3x3 mask",
        _GOL_FLAGS, _gol_runner("row-popc"), _gol_prepare("row-popc"),
    ),
    VariantDescriptor(
        "gol", "row-fulladder", "GoL6",
        "row packing, bitwise full-adder over whole words",
        _GOL_FLAGS, _gol_runner("row-fulladder"), _gol_prepare("row-fulladder"),
    ),
    VariantDescriptor(
        "knn", "oracle", "oracle",
        "exact per-query selection oracle", _KNN_FLAGS, _knn_oracle,
    ),
    VariantDescriptor(
        "knn", "heap", "kNN1",
        "per-query bounded max-heap with replace-root",
        _KNN_FLAGS, _knn_heap,
    ),
    VariantDescriptor(
        "knn", "buffered", "kNN7",
        "sorted top-k, candidate buffer, bitonic sort + merge",
        _KNN_FLAGS + ("--batch-size",), _knn_buffered,
    ),
)


def check_task(task: str) -> str:
    if task not in TASKS:
        raise RegistryError(f"unknown task {task!r}; valid tasks: {', '.join(TASKS)}")
    return task


def variants_for(task: str = None):
    """Descriptors, stage-ordered, optionally filtered by task."""
    if task is not None:
        check_task(task)
    rows = [v for v in VARIANTS if task is None or v.task == task]
    return sorted(rows, key=lambda v: (v.task, stage_sort_key(v.stage), v.name))


def get_variant(task: str, name: str) -> VariantDescriptor:
    check_task(task)
    for v in VARIANTS:
        if v.task == task and v.name == name:
            return v
    known = ", ".join(v.name for v in variants_for(task))
    raise RegistryError(f"unknown {task} variant {name!r}; known: {known}")


# ---------------------------------------------------------------------------
# result comparison (exact, first divergence reported)


def compare_grids(expected, actual):
    e = to_byte_grid(expected)
    a = to_byte_grid(actual)
    if (e.width, e.height) != (a.width, a.height):
        return f"dimension mismatch: expected {e.width}x{e.height}, got {a.width}x{a.height}"
    if np.array_equal(e.cells, a.cells):
        return None
    r, c = np.argwhere(e.cells != a.cells)[0]
    return (
        f"first mismatch at cell (row {r}, col {c}): "
        f"expected {e.cells[r, c]}, got {a.cells[r, c]}"
    )


def compare_histograms(expected, actual):
    if expected.char_range != actual.char_range:
        return f"range mismatch: expected {expected.char_range}, got {actual.char_range}"
    if np.array_equal(expected.bins, actual.bins):
        return None
    i = int(np.flatnonzero(expected.bins != actual.bins)[0])
    byte = expected.char_range.from_value + i
    return (
        f"first mismatch at bin {i} (byte value {byte}): "
        f"expected {int(expected.bins[i])}, got {int(actual.bins[i])}"
    )


def compare_neighbor_lists(expected, actual):
    if len(expected) != len(actual):
        return f"query count mismatch: expected {len(expected)}, got {len(actual)}"
    for q, (e, a) in enumerate(zip(expected, actual)):
        if e.k != a.k:
            return f"query {q}: k mismatch: expected {e.k}, got {a.k}"
        bad = (e.indices != a.indices) | (e.distances != a.distances)
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            return (
                f"first mismatch at query {q}, rank {r}: expected "
                f"(index {e.indices[r]}, distance {e.distances[r]!r}), got "
                f"(index {a.indices[r]}, distance {a.distances[r]!r})"
            )
    return None


COMPARATORS = {
    "histogram": compare_histograms,
    "gol": compare_grids,
    "knn": compare_neighbor_lists,
}
