"""Portable benchmark suite for three data-parallel kernel ladders:
character-range histograms, Game of Life steps, and multi-query k-NN."""

from .bench import BenchReport, RunConfig, run_benchmark, verify
from .errors import (
    BenchError,
    EncodingError,
    FormatError,
    InsufficientDataError,
    ParameterError,
    RegistryError,
    VerificationError,
)
from .workload import WorkloadSpec

__version__ = "0.1.0"

__all__ = [
    "BenchError",
    "BenchReport",
    "EncodingError",
    "FormatError",
    "InsufficientDataError",
    "ParameterError",
    "RegistryError",
    "RunConfig",
    "VerificationError",
    "WorkloadSpec",
    "run_benchmark",
    "verify",
    "__version__",
]
