"""Distance between solutions with mollified and original checkerboard coefficients.

Usage: python3 scripts/mollify_sweep.py [--h 2^-7] [--mmin 3] [--mmax 7]
"""

import argparse
import sys

from hopflab import scenarios as sc
from hopflab.config import parse_length
from hopflab.errors import HopfLabError


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", default="2^-7")
    ap.add_argument("--mmin", type=int, default=3)
    ap.add_argument("--mmax", type=int, default=7)
    args = ap.parse_args(argv)
    s = sc.by_id("L2.2-mollify")
    s = s.with_(probes={"epsilons": [2.0**-m for m in range(args.mmin, args.mmax + 1)]})
    try:
        b = sc.run(s, h=parse_length(args.h))
    except HopfLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("epsilon,sup_abs_diff")
    diffs = b.metadata["sup_diff"]
    for e in sorted(diffs, reverse=True):
        print(f"{e:g},{diffs[e]:.6e}")
    for line in b.summary_lines():
        if " check " in line:
            print(line)
    return 0 if b.passed else 1


if __name__ == "__main__":
    sys.exit(main())
