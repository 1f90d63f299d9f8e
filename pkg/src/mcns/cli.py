"""Command-line entry point: mcns {validate | evolve | rates | profiles}.

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, DivergenceError, SnapshotFormatError
from .runner import (ExperimentConfig, parse_config, run_evolve, run_profiles,
                     run_rates, run_validate)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcns",
        description="Pseudo-spectral experiments for the modified compressible "
                    "Navier-Stokes system in curl-divergence form")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
            ("validate", "run the cross-module invariant suites"),
            ("evolve", "time-integrate the configured experiment to disk"),
            ("rates", "evolve, decompose and emit the decay-rate report"),
            ("profiles", "emit closed-form asymptotic profiles as CSV")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="TOML experiment config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for parameter sweeps")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config entry, e.g. solver.dt=0.02")
    return parser


def _load_config(args):
    if args.config is None:
        cfg = ExperimentConfig()
        from .runner import apply_override
        for ov in args.override:
            cfg = apply_override(cfg, ov)
        return cfg
    return parse_config(args.config, overrides=args.override)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            code, verdict = run_validate(cfg, args.out)
            print(json.dumps(verdict, indent=2))
            return code
        if args.command == "evolve":
            run_evolve(cfg, args.out)
            print(f"trajectory written to {args.out}")
            return EXIT_OK
        if args.command == "rates":
            code, report = run_rates(cfg, args.out, threads=args.threads)
            if hasattr(report, "to_text"):
                print(report.to_text())
            return code
        if args.command == "profiles":
            path = run_profiles(cfg, args.out)
            print(f"profiles written to {path}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SnapshotFormatError as exc:
        print(f"snapshot format error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
