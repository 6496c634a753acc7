"""Result rows, their fixed CSV schemas, and the JSON sidecar.

CSV files hold only deterministic values so that rerunning a sweep with the
same configuration reproduces them byte for byte. Wall-clock timings and the
environment fingerprint go to the sidecar instead.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError

SCHEMAS: dict[str, tuple[str, ...]] = {
    "verify": ("check", "p", "passed", "measure"),
    "spectral": (
        "p",
        "sigma1_phi",
        "sigma1_phi_prime",
        "sigma_ratio",
        "harmonic_sum",
        "harmonic_ratio",
    ),
    "thm1": ("p", "mean_ratio", "std_ratio"),
    "thm1-seeds": ("p", "seed", "v", "g", "ratio_scaled"),
    "thm1-bound": ("p", "seed", "v", "g", "bound_factor", "slack"),
    "cov": ("p", "mscov", "var_log_exact"),
    "train": (
        "n",
        "p",
        "seed",
        "base",
        "epoch",
        "train_loss",
        "test_loss",
        "train_acc",
        "test_acc",
    ),
    "all-bits": ("n", "p", "seed", "epoch", "bit", "test_acc"),
}


@dataclass
class ExperimentRecord:
    """One CSV row. ``stats`` keys must match the experiment's schema."""

    experiment: str
    stats: dict
    wall_time: float = 0.0
    key: int | None = None
    seed: int | None = None

    def __post_init__(self):
        schema = SCHEMAS.get(self.experiment)
        if schema is None:
            raise ConfigError(f"no CSV schema for {self.experiment!r}")
        if set(self.stats) != set(schema):
            raise ConfigError(
                f"{self.experiment} row has columns {sorted(self.stats)}, "
                f"schema is {list(schema)}"
            )
        for name, value in self.stats.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"non-finite statistic {name}={value}")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def csv_bytes(experiment: str, records: list[ExperimentRecord]) -> bytes:
    schema = SCHEMAS[experiment]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    for rec in records:
        if rec.experiment != experiment:
            raise ConfigError(f"{rec.experiment} row in a {experiment} file")
        writer.writerow([_fmt(rec.stats[c]) for c in schema])
    return buf.getvalue().encode("utf-8")


def write_csv(path: str | Path, experiment: str, records: list[ExperimentRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(csv_bytes(experiment, records))
    return path


def load_csv(path: str | Path, experiment: str) -> list[ExperimentRecord]:
    """Read a result file, rejecting any header that differs from the schema."""
    schema = SCHEMAS[experiment]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != schema:
            raise ConfigError(f"{path}: header {header} does not match {schema}")
        rows = []
        for line in reader:
            if len(line) != len(schema):
                raise ConfigError(f"{path}: malformed row {line}")
            rows.append(ExperimentRecord(experiment, dict(zip(schema, map(_parse, line)))))
    return rows


def environment() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
    }


def write_sidecar(path: str | Path, config: dict, summary: dict, timings: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config,
        "environment": environment(),
        "summary": summary,
        "wall_times": timings,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)
