"""Command-line harness: ``gen``, ``list``, ``verify``, ``run``, ``report``.

Exit codes: 0 success, 2 parameter error, 3 verification failure,
4 malformed file.
"""

import argparse
import sys
from pathlib import Path

from .bench import RunConfig, run_benchmark, verify
from .errors import BenchError, EXIT_VERIFICATION
from .registry import TASKS, check_task, get_variant, variants_for
from .reporting import (
    apply_speedups,
    load_report_file,
    merge_reports,
    render,
    reports_to_json,
)
from .workload import (
    TEXT_KINDS,
    WorkloadSpec,
    build_text,
    gen_grid,
    gen_points,
    derive_seed,
    write_grid_file,
    write_points_file,
)

_DATA_STREAM = 11
_QUERY_STREAM = 12


def _add_task_flags(p, include_variant=True):
    p.add_argument("--task", required=True, choices=TASKS)
    if include_variant:
        p.add_argument("--variant", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    # histogram
    p.add_argument("--bytes", type=int, default=None, dest="text_bytes")
    p.add_argument("--text", choices=TEXT_KINDS, default=None)
    p.add_argument("--repeat-byte", type=int, default=None)
    p.add_argument("--repeat-to-size", type=int, default=None)
    p.add_argument("--range-from", type=int, default=None)
    p.add_argument("--range-to", type=int, default=None)
    p.add_argument("--items-per-worker", type=int, default=None)
    p.add_argument("--pattern", choices=("block", "stride"), default=None)
    # game of life
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    # knn
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)


def _spec_from_args(args) -> WorkloadSpec:
    spec = WorkloadSpec(task=args.task, seed=args.seed)
    overrides = {
        "text_bytes": args.text_bytes,
        "text_kind": args.text,
        "repeat_byte": args.repeat_byte,
        "repeat_to_size": args.repeat_to_size,
        "range_from": args.range_from,
        "range_to": args.range_to,
        "width": args.width,
        "height": args.height,
        "density": args.density,
        "iters": args.iters,
        "n": args.n,
        "m": args.m,
        "k": args.k,
        "batch_size": args.batch_size,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(spec, name, value)
    return spec


def _params_from_args(args) -> dict:
    params = {"workers": args.workers}
    if args.items_per_worker is not None:
        params["items_per_worker"] = args.items_per_worker
    if args.pattern is not None:
        params["pattern"] = args.pattern
    return params


def _emit(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    spec = _spec_from_args(args)
    if args.output is None:
        raise BenchError("gen requires --output")
    if spec.task == "histogram":
        data = build_text(spec)
        Path(args.output).write_bytes(data)
        print(f"wrote {len(data)} bytes of {spec.text_kind} text to {args.output}")
    elif spec.task == "gol":
        grid = gen_grid(spec.seed, spec.width, spec.height, spec.density)
        write_grid_file(args.output, grid)
        print(f"wrote {spec.width}x{spec.height} grid to {args.output}")
    else:
        data = gen_points(derive_seed(spec.seed, _DATA_STREAM), spec.n, spec.lo, spec.hi)
        queries = gen_points(derive_seed(spec.seed, _QUERY_STREAM), spec.m, spec.lo, spec.hi)
        data_path = f"{args.output}-data.pts2"
        query_path = f"{args.output}-queries.pts2"
        write_points_file(data_path, data)
        write_points_file(query_path, queries)
        print(f"wrote {spec.n} points to {data_path} and {spec.m} queries to {query_path}")
    return 0


def cmd_list(args) -> int:
    if args.task is not None:
        check_task(args.task)
    rows = variants_for(args.task)
    widths = [
        max(4, max(len(v.task) for v in rows)),
        max(7, max(len(v.name) for v in rows)),
        max(5, max(len(v.stage) for v in rows)),
    ]
    print(
        f"{'task'.ljust(widths[0])}  {'variant'.ljust(widths[1])}  "
        f"{'stage'.ljust(widths[2])}  summary (flags)"
    )
    for v in rows:
        print(
            f"{v.task.ljust(widths[0])}  {v.name.ljust(widths[1])}  "
            f"{v.stage.ljust(widths[2])}  {v.summary} ({', '.join(v.flags)})"
        )
    return 0


def cmd_verify(args) -> int:
    get_variant(args.task, args.variant)
    spec = _spec_from_args(args)
    outcome = verify(args.task, args.variant, spec, _params_from_args(args))
    if outcome.passed:
        print(f"PASS {args.task}/{args.variant}: {outcome.detail}")
        return 0
    print(f"FAIL {args.task}/{args.variant}: {outcome.detail}")
    return EXIT_VERIFICATION


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    config = RunConfig(repeat=args.repeat, warmup=args.warmup)
    report = run_benchmark(
        args.task,
        args.variant,
        spec,
        params=_params_from_args(args),
        config=config,
        skip_verify=args.skip_verify,
    )
    if args.format == "json":
        _emit(reports_to_json([report]), args.output)
    else:
        _emit(render([report], args.format), args.output)
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        reports.extend(load_report_file(path))
    merged = merge_reports(reports, allow_mixed=args.allow_mixed)
    apply_speedups(merged)
    _emit(render(merged, args.format), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parbench",
        description="Correctness-gated benchmark harness for the histogram, "
        "Game of Life and k-NN kernel ladders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a workload input file")
    _add_task_flags(p, include_variant=False)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("list", help="list registered variants")
    p.add_argument("--task", default=None)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("verify", help="compare a variant against its oracle")
    _add_task_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="verify, then time a variant")
    _add_task_flags(p)
    p.add_argument("--repeat", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--skip-verify", action="store_true")
    p.add_argument("--format", choices=("table", "csv", "json"), default="json")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="merge and render report files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--allow-mixed", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
