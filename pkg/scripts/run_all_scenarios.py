"""Run every scenario in configs/ and print one verdict line per scan.

    python3 scripts/run_all_scenarios.py [--out runs] [--threads 4]

Scenarios that stop with a config or scenario error (bad_a.json is one on
purpose) are reported with their exit status.
"""

import argparse
from pathlib import Path
import sys

from dispersive_lab.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run(out, threads):
    statuses = {}
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        print(f"== {cfg.stem}")
        statuses[cfg.stem] = main(["run", str(cfg), "--out", str(Path(out) / cfg.stem), "--threads", str(threads)])
    print()
    for name, status in statuses.items():
        print(f"{name:24s} exit {status}")
    return max(statuses.values(), default=0)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs")
    parser.add_argument("--threads", type=int, default=4)
    args = parser.parse_args()
    sys.exit(run(args.out, args.threads))
