"""Verdict table for the Dini dichotomy pairs across fields and spacings.

Usage: python3 scripts/dichotomy_table.py [--levels 2^-7,2^-8] [--csv out.csv]
"""

import argparse
import csv
import sys

from hopflab import scenarios as sc
from hopflab.config import parse_length

FIELDS = {"identity": {"kind": "identity"}, "checkerboard": sc.CHECKER}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="2^-7,2^-8")
    ap.add_argument("--pairs", choices=("regime", "all"), default="regime",
                    help="regime: the four main scenarios; all: include the log pairs")
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    levels = [parse_length(t) for t in args.levels.split(",")]
    ids = sc.REGIME_IDS if args.pairs == "regime" else [i for p in sc.DICHOTOMY_PAIRS for i in p]
    rows = []
    for sid in ids:
        s = sc.by_id(sid)
        for fname, coeffs in FIELDS.items():
            for h in levels:
                b = sc.run(s, h=h, coeffs=coeffs)
                hopf = b.reports.get("hopf")
                m = b.reports.get("m")
                rows.append({
                    "scenario": sid, "dini": s.dini_status(), "field": fname, "h": h,
                    "hopf_verdict": hopf.verdict if hopf else "",
                    "hopf_slope": f"{hopf.loglog_slope:.4f}" if hopf else "",
                    "m_verdict": m.verdict if m else "",
                    "m_last_ratio": f"{m.ratios[-1]:.4f}" if m is not None and len(m.ratios) else "",
                    "expected": ",".join(f"{k}={v}" for k, v in s.verdict_expectations().items()),
                    "status": "PASS" if b.passed else "FAIL",
                })
                r = rows[-1]
                print(f"{sid:22s} {r['dini']:10s} {fname:12s} h={h:<10g} hopf={r['hopf_verdict']:15s}"
                      f" slope={r['hopf_slope']:8s} M={r['m_verdict']:13s} {r['status']}", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0 if all(r["status"] == "PASS" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
