"""Run every experiment at its default config and print a pass/fail summary.

    python3 scripts/reproduce_all.py [--out results] [--only wiener-gap,p-average]

Each experiment writes results/<name>/result.json plus CSV tables. The exit
status is 0 only if every experiment passed all of its flags.
"""
import argparse
import sys
import time

from radinfo.cli import main as cli_main
from radinfo.experiments import EXPERIMENTS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", default="", help="comma-separated subset of experiments")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    names = [n for n in args.only.split(",") if n] or list(EXPERIMENTS)
    status = {}
    for name in names:
        t0 = time.perf_counter()
        code = cli_main(["run", name, "--out", f"{args.out}/{name}", "--workers", str(args.workers)])
        status[name] = code
        print(f"== {name}: exit {code} ({time.perf_counter() - t0:.1f}s)", flush=True)
    print()
    for name, code in status.items():
        print(f"{name:16s} {'ok' if code == 0 else 'FLAGS FAILED' if code == 1 else 'USAGE'}")
    return 0 if all(c == 0 for c in status.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
