"""Verification gate and timing methodology.

Every variant is checked against its task oracle on the exact workload
before anything is timed (skippable only explicitly). Timed repetitions
run on a monotonic clock and cover only the kernel computation: inputs
are generated, encoded and resident in memory beforehand, and verification
is never part of a measurement.
"""

import os
import platform
import statistics
import time
from dataclasses import dataclass

from .errors import ParameterError, VerificationError
from .registry import COMPARATORS, get_variant
from .workload import WorkloadSpec, materialize

SCHEMA_VERSION = 1
TIMING_SCOPE = "kernel computation only; inputs generated and memory-resident before timing"

BASELINES = {"histogram": "atomic", "gol": "byte", "knn": "heap"}

THROUGHPUT_UNITS = {
    "histogram": "bytes/s",
    "gol": "cell-updates/s",
    "knn": "point-query-pairs/s",
}


@dataclass
class RunConfig:
    repeat: int = 10
    warmup: int = 3

    def __post_init__(self):
        if not isinstance(self.repeat, int) or self.repeat < 1:
            raise ParameterError(f"repeat must be >= 1, got {self.repeat!r}")
        if not isinstance(self.warmup, int) or self.warmup < 0:
            raise ParameterError(f"warmup must be >= 0, got {self.warmup!r}")


@dataclass
class BenchReport:
    task: str
    variant: str
    stage: str
    params: dict
    repetitions: int
    warmups: int
    times_ns: list
    median_ns: float
    throughput: float
    throughput_unit: str
    correctness: str
    machine: dict
    timing_scope: str = TIMING_SCOPE
    baseline: str = None
    speedup: float = None

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "variant": self.variant,
            "stage": self.stage,
            "params": dict(self.params),
            "repetitions": self.repetitions,
            "warmups": self.warmups,
            "times_ns": list(self.times_ns),
            "median_ns": self.median_ns,
            "throughput": self.throughput,
            "throughput_unit": self.throughput_unit,
            "correctness": self.correctness,
            "machine": dict(self.machine),
            "timing_scope": self.timing_scope,
            "baseline": self.baseline,
            "speedup": self.speedup,
        }


def machine_descriptor() -> dict:
    desc = {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
    }
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.lower().startswith("model name"):
                    desc["cpu_model"] = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return desc


@dataclass
class VerifyOutcome:
    task: str
    variant: str
    passed: bool
    detail: str

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def verify(task: str, variant: str, spec: WorkloadSpec, params: dict = None) -> VerifyOutcome:
    """Run the variant and its oracle on the generated workload and compare
    outputs exactly; reports the first divergence on failure."""
    params = dict(params or {})
    desc = get_variant(task, variant)
    oracle = get_variant(task, "oracle")
    inputs = materialize(spec)
    expected = oracle.runner(oracle.prepared(inputs), {})
    actual = desc.runner(desc.prepared(inputs), params)
    divergence = COMPARATORS[task](expected, actual)
    if divergence is None:
        return VerifyOutcome(task, variant, True, "output identical to oracle")
    return VerifyOutcome(task, variant, False, divergence)


def _work_units(task: str, spec: WorkloadSpec, inputs: dict) -> int:
    if task == "histogram":
        return len(inputs["text"])
    if task == "gol":
        return spec.width * spec.height * spec.iters
    return spec.n * spec.m


def run_benchmark(
    task: str,
    variant: str,
    spec: WorkloadSpec,
    params: dict = None,
    config: RunConfig = None,
    skip_verify: bool = False,
) -> BenchReport:
    """Verify (unless told not to), then time warmups + repetitions."""
    params = dict(params or {})
    config = config or RunConfig()
    desc = get_variant(task, variant)
    if skip_verify:
        correctness = "skipped"
    else:
        outcome = verify(task, variant, spec, params)
        if not outcome.passed:
            raise VerificationError(
                f"{task}/{variant} failed verification: {outcome.detail}"
            )
        correctness = "pass"

    inputs = materialize(spec)
    prepared = desc.prepared(inputs)
    work = _work_units(task, spec, inputs)

    for _ in range(config.warmup):
        desc.runner(prepared, params)
    times = []
    for _ in range(config.repeat):
        t0 = time.perf_counter_ns()
        desc.runner(prepared, params)
        times.append(time.perf_counter_ns() - t0)
    median_ns = float(statistics.median(times))

    report_params = spec.describe()
    report_params.update(params)
    return BenchReport(
        task=task,
        variant=variant,
        stage=desc.stage,
        params=report_params,
        repetitions=config.repeat,
        warmups=config.warmup,
        times_ns=times,
        median_ns=median_ns,
        throughput=work / (median_ns / 1e9) if median_ns else float("inf"),
        throughput_unit=THROUGHPUT_UNITS[task],
        correctness=correctness,
        machine=machine_descriptor(),
        baseline=BASELINES[task],
        speedup=1.0 if variant == BASELINES[task] else None,
    )
