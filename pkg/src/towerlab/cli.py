"""Command line front end: run a named experiment from a config file."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .experiments import experiment_names, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="towerlab",
        description="run reproducible tower-suspension experiments")
    parser.add_argument("--version", action="version",
                        version=f"towerlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--out", required=True, help="output directory")
    sub.add_parser("list", help="list the available experiments")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in experiment_names():
            print(name)
        return 0
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    summary = run_experiment(cfg, args.out)
    for entry in summary["assertions"]:
        mark = "pass" if entry["passed"] else "FAIL"
        print(f"[{mark}] {entry['name']}: {entry['detail']}")
    verdict = "PASS" if summary["passed"] else "FAIL"
    print(f"{summary['experiment']}: {verdict} "
          f"({sum(e['passed'] for e in summary['assertions'])}"
          f"/{len(summary['assertions'])} assertions)")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
