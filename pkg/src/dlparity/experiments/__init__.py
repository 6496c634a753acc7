"""Sweeps, result files and plots for the command-line experiments."""

from .config import EXPERIMENTS, SweepConfig, child_seed
from .records import SCHEMAS, ExperimentRecord, csv_bytes, load_csv, write_csv
from .runners import RUNNERS, RunResult
from .svg import render_svg

__all__ = [
    "EXPERIMENTS",
    "RUNNERS",
    "SCHEMAS",
    "ExperimentRecord",
    "RunResult",
    "SweepConfig",
    "child_seed",
    "csv_bytes",
    "load_csv",
    "render_svg",
    "write_csv",
]
