"""Nodal error of grid solutions against exact cone harmonics under refinement.

The reflex aperture has a singular gradient at the vertex, so the observed
rate is reported, not asserted.

Usage: python3 scripts/refinement_study.py [--theta 3pi/4] [--kmin 4] [--kmax 8]
"""

import argparse
import math
import sys

import numpy as np

from hopflab.closedform import ConeHarmonic, parse_angle
from hopflab.coeffs import Identity
from hopflab.geometry import rasterize
from hopflab.solver import boundary_data, discretize, solve_dirichlet


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", default="3pi/4", help="half aperture, e.g. pi/4 or 3pi/4")
    ap.add_argument("--kmin", type=int, default=4)
    ap.add_argument("--kmax", type=int, default=8)
    args = ap.parse_args(argv)
    ch = ConeHarmonic(parse_angle(args.theta))
    print(f"theta={ch.theta:.6f} gamma={ch.gamma:.6f}")
    print("h,max_error,observed_rate")
    prev = None
    for k in range(args.kmin, args.kmax + 1):
        h = 2.0**-k
        dom = rasterize(ch.body(1.0), h)
        u = solve_dirichlet(discretize(Identity(), dom), boundary_data(dom, ch.value, False))
        exact = ch.value(np.stack(dom.coords(), -1))
        err = float(np.max(np.abs(u.values - exact)[dom.interior]))
        rate = "" if prev is None else f"{math.log2(prev / err):.3f}"
        print(f"{h:g},{err:.6e},{rate}", flush=True)
        prev = err
    return 0


if __name__ == "__main__":
    sys.exit(main())
