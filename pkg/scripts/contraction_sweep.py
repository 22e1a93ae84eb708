"""Measured Lipschitz constant of mu -> T(mu) along a lambda-doubling sweep.

For the three-point problem on (0, 1) the map is affine with slope
4 sinh(0.75 sqrt(lam)) / sinh(sqrt(lam)); the script prints the measured and
exact slopes side by side, plus the integral condition u = int u on the whole
boundary (exact slope 2 tanh(sqrt(lam)/2) / sqrt(lam)).

    python scripts/contraction_sweep.py --start 25 --doublings 8
"""

import argparse
import math

from nlbvp import Grid, NonlocalFunctional, Nonlinearity, ProblemSpec, ScalarField, estimate_contraction
from nlbvp import recommended_resolution
from nlbvp.geometry import Domain


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--start", type=float, default=25.0)
    ap.add_argument("--doublings", type=int, default=8)
    ap.add_argument("--nodes-per-layer", type=int, default=40)
    args = ap.parse_args()

    unit = Domain.interval(0.0, 1.0)
    nl = Nonlinearity.parse("s", "0", 1.0)
    cases = {
        "three-point": (NonlocalFunctional.multipoint([4.0], [(0.75,)], sides=["right"]),
                        lambda a: 4 * math.sinh(0.75 * a) / math.sinh(a)),
        "integral": (NonlocalFunctional.integral("1"), lambda a: 2 * math.tanh(a / 2) / a),
    }
    print(f"{'lambda':>10} " + " ".join(f"{n + ' (num)':>18} {n + ' (exact)':>18}" for n in cases))
    lam = args.start
    for _ in range(args.doublings):
        grid = Grid(unit, recommended_resolution(unit, lam, args.nodes_per_layer))
        cols = []
        for bc, exact in cases.values():
            spec = ProblemSpec(unit, ScalarField.parse("1"), nl, ScalarField.parse("0"), lam, bc)
            cols.append(f"{estimate_contraction(spec, grid, 0.0, 1.0):18.8g} {exact(math.sqrt(lam)):18.8g}")
        print(f"{lam:10.5g} " + " ".join(cols))
        lam *= 2


if __name__ == "__main__":
    main()
