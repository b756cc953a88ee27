#!/usr/bin/env python3
"""Run every config under configs/ and print a verdict table.

Usage: python scripts/run_all.py [--configs DIR] [--out DIR]
Exit status is the number of failing experiments.
"""

import argparse
import pathlib
import sys
import time

from towerlab.cli import main as towerlab_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    root = pathlib.Path(__file__).resolve().parent.parent
    parser.add_argument("--configs", default=root / "configs", type=pathlib.Path)
    parser.add_argument("--out", default=root / "runs", type=pathlib.Path)
    args = parser.parse_args()

    cfgs = sorted(args.configs.glob("*.cfg"))
    if not cfgs:
        print(f"no .cfg files under {args.configs}", file=sys.stderr)
        return 1
    failures = 0
    for cfg in cfgs:
        out_dir = args.out / cfg.stem
        t0 = time.perf_counter()
        code = towerlab_main(["run", "--config", str(cfg), "--out", str(out_dir)])
        took = time.perf_counter() - t0
        mark = "ok" if code == 0 else f"exit {code}"
        print(f"--- {cfg.stem}: {mark} in {took:.1f}s -> {out_dir}")
        failures += code != 0
    return failures


if __name__ == "__main__":
    sys.exit(main())
