"""Sweep configuration and seed derivation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..spectral import DEFAULT_DENSE_LIMIT
from ..zp_core import primes_between

EXPERIMENTS = ("verify", "thm1", "train", "cov", "all-bits", "spectral")

# desk-scale defaults; any field may be overridden from the CLI or a JSON file
_DEFAULTS = {
    "verify": dict(pmin=3, pmax=503),
    "spectral": dict(pmin=3, pmax=2000),
    "thm1": dict(pmin=300, pmax=1500, seeds=tuple(range(20))),
    "cov": dict(pmin=3, pmax=500),
    "train": dict(bitlengths=(8, 16, 24), seeds=(0, 1, 2)),
    "all-bits": dict(bitlengths=(8, 20), seeds=(0, 1), chance_bitlength=20),
}


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    pmin: int = 3
    pmax: int = 503
    bitlengths: tuple[int, ...] = ()
    seeds: tuple[int, ...] = (0,)
    master_seed: int = 0
    width: tuple[int, ...] = (100, 100)
    loss: str = "binary_cross_entropy"
    epochs: int = 300
    batch: int = 100
    samples: int = 5000
    split: float = 0.7
    lr: float = 0.001
    eval_every: int = 10
    out: str = "results"
    dense_limit: int = DEFAULT_DENSE_LIMIT
    exhaustive_limit: int = 10_000
    jacobi_limit: int = 101
    bound_pmax: int = 503
    chance_bitlength: int = 24
    chance_band: tuple[float, float] = (0.45, 0.55)
    monotone_slack: float = 0.05
    alpha_band: tuple[float, float] = (2.8, 3.2)
    workers: int = 1

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "SweepConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        values = {**_DEFAULTS[experiment], **overrides}
        return cls(experiment=experiment, **values)

    def __post_init__(self):
        for name in ("bitlengths", "seeds", "width", "chance_band", "alpha_band"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self) -> "SweepConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.experiment in ("train", "all-bits"):
            if not self.bitlengths:
                raise ConfigError("no bitlengths given")
            if min(self.bitlengths) < 3:
                raise ConfigError("bitlengths must be >= 3")
        else:
            if self.pmin < 3:
                raise ConfigError("pmin must be >= 3")
            if not self.primes():
                raise ConfigError(f"no primes in [{self.pmin}, {self.pmax}]")
        return self

    def primes(self) -> list[int]:
        return primes_between(max(self.pmin, 3), self.pmax)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def with_json_file(self, path: str | Path) -> "SweepConfig":
        """Return a copy with the fields from a JSON object file applied on top."""
        data = json.loads(Path(path).read_text())
        unknown = set(data) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **data)


def child_seed(master: int, *key: int) -> int:
    """Deterministic 32-bit seed for the sweep item named by ``key``."""
    return int(np.random.SeedSequence([master, *key]).generate_state(1)[0])
