"""Report loading, merging and rendering (table, CSV, JSON).

The JSON schema is versioned: a report file is an object with
``"schema": 1`` and a ``"reports"`` list; each row carries the fields of
``BenchReport``. CSV columns are fixed and documented in the README.
Rendering is deterministic given identical timing inputs.
"""

import csv
import io
import json

from .bench import BASELINES, SCHEMA_VERSION, BenchReport
from .errors import FormatError, ParameterError
from .registry import stage_sort_key

_ROW_FIELDS = {
    "task": str,
    "variant": str,
    "stage": str,
    "params": dict,
    "repetitions": int,
    "warmups": int,
    "times_ns": list,
    "median_ns": (int, float),
    "throughput": (int, float),
    "throughput_unit": str,
    "correctness": str,
    "machine": dict,
    "timing_scope": str,
}

CSV_COLUMNS = (
    "task", "variant", "stage", "repetitions", "warmups", "median_ns",
    "throughput", "throughput_unit", "speedup", "baseline", "correctness",
    "times_ns", "params",
)


def report_from_dict(row, path="$") -> BenchReport:
    if not isinstance(row, dict):
        raise FormatError(f"{path}: report row must be an object, got {type(row).__name__}")
    for name, types in _ROW_FIELDS.items():
        if name not in row:
            raise FormatError(f"{path}.{name}: missing required field")
        if not isinstance(row[name], types) or isinstance(row[name], bool):
            raise FormatError(
                f"{path}.{name}: expected {getattr(types, '__name__', types)}, "
                f"got {type(row[name]).__name__}"
            )
    for i, t in enumerate(row["times_ns"]):
        if not isinstance(t, (int, float)) or isinstance(t, bool):
            raise FormatError(f"{path}.times_ns[{i}]: expected a number")
    return BenchReport(
        task=row["task"],
        variant=row["variant"],
        stage=row["stage"],
        params=row["params"],
        repetitions=row["repetitions"],
        warmups=row["warmups"],
        times_ns=row["times_ns"],
        median_ns=row["median_ns"],
        throughput=row["throughput"],
        throughput_unit=row["throughput_unit"],
        correctness=row["correctness"],
        machine=row["machine"],
        timing_scope=row["timing_scope"],
        baseline=row.get("baseline"),
        speedup=row.get("speedup"),
    )


def reports_to_json(reports) -> str:
    doc = {"schema": SCHEMA_VERSION, "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_report_document(text, path="$") -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: report document must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise FormatError(
            f"{path}.schema: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}"
        )
    rows = doc.get("reports")
    if not isinstance(rows, list):
        raise FormatError(f"{path}.reports: expected a list")
    return [report_from_dict(row, f"{path}.reports[{i}]") for i, row in enumerate(rows)]


def load_report_file(path) -> list:
    with open(path, encoding="utf-8") as f:
        return parse_report_document(f.read(), path=str(path))


def merge_reports(reports, allow_mixed: bool = False) -> list:
    """Stage-ordered merge; refuses to mix tasks unless told to."""
    tasks = sorted({r.task for r in reports})
    if len(tasks) > 1 and not allow_mixed:
        raise ParameterError(
            f"reports mix tasks {', '.join(tasks)}; pass --allow-mixed to combine them"
        )
    return sorted(reports, key=lambda r: (r.task, stage_sort_key(r.stage), r.variant))


def apply_speedups(reports) -> None:
    """Fill speedup = baseline median / variant median, per task, in place.

    The baseline row is the first merged row whose variant is the task's
    named baseline; rows of tasks without a baseline row keep speedup None.
    """
    base_median = {}
    for r in reports:
        if r.variant == BASELINES.get(r.task) and r.task not in base_median:
            base_median[r.task] = r.median_ns
    for r in reports:
        r.baseline = BASELINES.get(r.task)
        if r.task in base_median and r.median_ns:
            r.speedup = base_median[r.task] / r.median_ns


def render_json(reports) -> str:
    return reports_to_json(reports)


def render_csv(reports) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        d = r.to_dict()
        writer.writerow(
            [
                d["task"], d["variant"], d["stage"], d["repetitions"], d["warmups"],
                d["median_ns"], d["throughput"], d["throughput_unit"],
                "" if d["speedup"] is None else d["speedup"],
                "" if d["baseline"] is None else d["baseline"],
                d["correctness"],
                ";".join(str(t) for t in d["times_ns"]),
                json.dumps(d["params"], sort_keys=True),
            ]
        )
    return out.getvalue()


def _fmt_ms(ns) -> str:
    return f"{ns / 1e6:.3f}"


def _fmt_throughput(value) -> str:
    return f"{value:.3e}"


def render_table(reports) -> str:
    headers = ("stage", "variant", "median_ms", "throughput", "unit", "speedup", "verdict")
    rows = []
    for r in reports:
        rows.append(
            (
                r.stage,
                r.variant,
                _fmt_ms(r.median_ns),
                _fmt_throughput(r.throughput),
                r.throughput_unit,
                "-" if r.speedup is None else f"{r.speedup:.2f}x",
                r.correctness,
            )
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


RENDERERS = {"table": render_table, "csv": render_csv, "json": render_json}


def render(reports, fmt: str) -> str:
    try:
        renderer = RENDERERS[fmt]
    except KeyError:
        raise ParameterError(
            f"unknown format {fmt!r}; known: {', '.join(sorted(RENDERERS))}"
        ) from None
    return renderer(reports)
