#!/usr/bin/env python3
"""Print the verdicts and headline numbers of a finished run directory.

Usage: python scripts/show_run.py runs/stage-dbar [more dirs ...]
"""

import json
import pathlib
import sys


def show(run_dir: pathlib.Path) -> None:
    summary = json.loads((run_dir / "summary.json").read_text())
    verdict = "PASS" if summary["passed"] else "FAIL"
    print(f"{summary['experiment']} ({run_dir}): {verdict}")
    for entry in summary["assertions"]:
        mark = "pass" if entry["passed"] else "FAIL"
        print(f"  [{mark}] {entry['name']}: {entry['detail']}")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        sys.exit(2)
    for arg in sys.argv[1:]:
        show(pathlib.Path(arg))
