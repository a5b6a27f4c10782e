"""Command line entry point: ``weakint <mode> [--config path.json] [flags]``.

Exit codes: 0 success, 2 configuration error, 3 enumeration budget
exceeded, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..errors import BudgetExceededError, ConfigError, NumericalError
from .experiment import FORMATS, MODES, ExperimentConfig, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERICAL = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakint", description="Variance estimation and coverage experiments.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--reps", type=int, dest="replications")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--stat")
    p.add_argument("--dist")
    p.add_argument("--out", help="output file; stdout when omitted")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--threads", type=int)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        base = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig(mode=args.mode)
        cfg = base.with_overrides(**overrides)
        result = run_experiment(cfg)
    except ConfigError as exc:
        print(f"weakint: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"weakint: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NumericalError as exc:
        print(f"weakint: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.out:
        result.write(cfg.out)
        print(json.dumps(result.summary, indent=2, allow_nan=False))
    else:
        sys.stdout.write(result.render())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
