"""Regenerate every figure preset from a calibration and print the checks."""

import argparse
import sys
import time
from pathlib import Path

from memlif.cli import load_calibration
from memlif.presets import FIGURES, reproduce


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--params", default=None, help="params file (default: bundled)")
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cal = load_calibration(args.params)
    failed = 0
    for fig in FIGURES:
        t0 = time.perf_counter()
        checks = reproduce(fig, cal, Path(args.out), jobs=args.jobs)
        print(f"{fig}: {time.perf_counter() - t0:.1f} s")
        for c in checks:
            print(f"  {'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}")
            failed += not c.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
