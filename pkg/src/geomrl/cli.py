"""Command-line entry point: ``geomrl run | compare | selftest``."""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import harness
from .config import load_config
from .errors import ConfigError
from .selftest import run_selftest

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parser() -> argparse.ArgumentParser:
    def common(default):
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--jobs", type=int, default=default,
                       help="worker processes (default: number of CPUs)")
        g.add_argument("--output", default=default, help="output directory (overrides the config)")
        return g

    # global flags are accepted before or after the subcommand; SUPPRESS keeps
    # the subcommand from overwriting a value given before it
    p = argparse.ArgumentParser(prog="geomrl", parents=[common(None)],
                                description="Geometric policy search experiments.")
    common = common(argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="train one adapter and write curve.csv")
    run.add_argument("config")
    cmp_ = sub.add_parser("compare", parents=[common],
                          help="train GRL and every applicable baseline")
    cmp_.add_argument("config")
    st = sub.add_parser("selftest", parents=[common], help="run the property oracles")
    st.add_argument("--filter", default=None, help="only properties whose name contains this")
    return p


def _jobs(args) -> int:
    return args.jobs if args.jobs and args.jobs > 0 else harness.default_jobs()


def cmd_run(config_path: str, jobs: int = 1, output: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except (ConfigError, OSError) as exc:
        print(f"config error: {config_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        curve = harness.run_experiment(cfg, jobs)
        out = harness.prepare_output(cfg, output)
        harness.write_curve_csv(out / "curve.csv", curve.records)
    except Exception as exc:  # noqa: BLE001 -- any failure maps to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out / 'curve.csv'}")
    return EXIT_OK


def cmd_compare(config_path: str, jobs: int = 1, output: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except (ConfigError, OSError) as exc:
        print(f"config error: {config_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        curves = harness.compare_adapters(cfg, jobs)
        out = harness.prepare_output(cfg, output)
        harness.write_compare_csv(out / "compare.csv", curves)
        rows = harness.summarize(curves)
        harness.write_summary(out / "summary.csv", rows)
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(harness.format_summary(rows))
    print(f"wrote {out / 'compare.csv'}")
    return EXIT_OK


def cmd_selftest(name_filter: str | None = None) -> int:
    results = run_selftest(name_filter)
    if not results:
        print(f"no property matches {name_filter!r}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, _jobs(args), args.output)
    if args.command == "compare":
        return cmd_compare(args.config, _jobs(args), args.output)
    return cmd_selftest(args.filter)


if __name__ == "__main__":
    sys.exit(main())
