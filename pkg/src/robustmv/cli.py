"""Command-line entry point.

    robustmv worst-case --config cfg.yaml
    robustmv frontier --config cfg.yaml --out results/
    robustmv simulate --config cfg.yaml --paths 100000 --seed 7
    robustmv reproduce-table 2 --quick
    robustmv diagnostics --config cfg.yaml

Exit status: 0 success, 2 configuration or input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .config import load_config
from .errors import ConfigError, NumericError, RobustMVError

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    p.add_argument("--steps", type=int, help="Euler steps over the horizon")
    p.add_argument("--quick", action="store_true", help=f"use {ex.QUICK_PATHS} paths")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustmv", description="Robust mean-variance portfolios under covariance ambiguity")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("worst-case", help="print the worst-case covariance and risk premium")
    p.add_argument("--config", required=True)

    p = sub.add_parser("frontier", help="write the robust efficient frontier as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo Sharpe ratios for the configured strategies")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    _sim_flags(p)

    p = sub.add_parser("reproduce-table", help="run a preset Sharpe experiment (2, 3 or 5)")
    p.add_argument("table", type=int, choices=[2, 3, 5])
    p.add_argument("--config", help="override the built-in preset")
    p.add_argument("--out")
    _sim_flags(p)

    p = sub.add_parser("diagnostics", help="worst case, saddle-point and ODE residual checks")
    p.add_argument("--config", required=True)
    return parser


def _run(args) -> None:
    if args.command == "worst-case":
        print(ex.run_worst_case(load_config(args.config)))
    elif args.command == "frontier":
        for path in ex.run_frontier(load_config(args.config), out_dir=args.out):
            print(f"wrote {path}")
    elif args.command == "diagnostics":
        print(ex.diagnostics(load_config(args.config)))
    else:
        if args.command == "reproduce-table" and args.config is None:
            cfg = ex.table_config(args.table)
        else:
            cfg = load_config(args.config)
        cfg = ex.with_overrides(cfg, seed=args.seed, paths=args.paths, steps=args.steps, out=args.out, quick=args.quick)
        result = ex.run_experiment(cfg)
        print(ex.format_table(result))
        for path in result.files:
            print(f"wrote {path}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RobustMVError as exc:
        # remaining domain errors stem from inputs the config allowed
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
