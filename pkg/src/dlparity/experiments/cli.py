"""``dlparity <experiment> [flags]``: run one sweep, exit 0 iff its checks pass."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import ConfigError
from .config import EXPERIMENTS, SweepConfig
from .records import _jsonable
from .runners import RUNNERS


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _seeds(text: str) -> tuple[int, ...]:
    # a bare count means seeds 0..count-1; a comma list names them explicitly
    values = _int_list(text)
    if "," not in text and len(values) == 1:
        return tuple(range(values[0]))
    return values


def _shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pmin", type=int)
    p.add_argument("--pmax", type=int)
    p.add_argument("--bitlengths", type=_int_list, help="e.g. 8,16,24")
    p.add_argument("--seeds", type=_seeds, help="a count N (seeds 0..N-1) or a list 0,3,7")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--width", type=_int_list, help="hidden layer widths, e.g. 100,100")
    p.add_argument("--loss", choices=["binary_cross_entropy", "squared"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--dense-limit", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--config", metavar="FILE", help="JSON object; its keys override flags")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlparity", description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        _shared_flags(sub.add_parser(name))
    return parser


def config_from_args(args: argparse.Namespace) -> SweepConfig:
    skip = {"experiment", "config", "verbose"}
    overrides = {
        k: v for k, v in vars(args).items() if k not in skip and v is not None
    }
    cfg = SweepConfig.for_experiment(args.experiment, **overrides)
    if args.config:
        cfg = cfg.with_json_file(args.config)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    result = RUNNERS[cfg.experiment](cfg)
    print(json.dumps(result.summary, indent=2, sort_keys=True, default=_jsonable))
    for path in result.files:
        print(f"wrote {path}")
    print("PASS" if result.passed else "FAIL")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
