"""Three-point problem u(0) = 0, u(1) = g_R + 4 u(0.75) on (0, 1).

Prints lambda_c and lambda*, then for each lambda compares the computed fixed
point and profile with the closed form.

    python scripts/three_point.py --lams 40 100 400 1600 --nodes 4097
"""

import argparse
import math

import numpy as np

from nlbvp import (
    FixedPointConfig,
    Grid,
    MultipointSpec1D,
    NonlocalFunctional,
    Nonlinearity,
    ProblemSpec,
    ScalarField,
    closed_form_multipoint,
    find_eta_root,
    fixed_point_solve,
    in_S_eta,
    lambda_star,
    multipoint_fixed_point,
)
from nlbvp.geometry import Domain


def build(lam, g_R):
    bc = NonlocalFunctional.multipoint([4.0], [(0.75,)], sides=["right"])
    nl = Nonlinearity.parse("s", "0", 1.0)
    return ProblemSpec(Domain.interval(0.0, 1.0), ScalarField.parse("1"), nl,
                       ScalarField.parse(f"{g_R}*x"), lam, bc)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lams", type=float, nargs="+", default=[40.0, 100.0, 400.0, 1600.0])
    ap.add_argument("--nodes", type=int, default=4097)
    ap.add_argument("--gR", type=float, default=1.0)
    args = ap.parse_args()

    spec1d = MultipointSpec1D(0.0, 1.0, args.gR, (4.0,), (0.75,))
    s_c = find_eta_root(spec1d, 50.0)
    print(f"lambda_c = {s_c**2:.12g}   lambda* = {lambda_star(spec1d):.12g}")
    grid = Grid(Domain.interval(0.0, 1.0), (args.nodes,))
    x = grid.points[:, 0]
    print(f"{'lambda':>10} {'member':>8} {'mu (numeric)':>16} {'mu (exact)':>16} {'slope':>10} {'max rel err':>12}")
    for lam in args.lams:
        k, mu_exact = multipoint_fixed_point(spec1d, lam)
        res = fixed_point_solve(build(lam, args.gR), grid, FixedPointConfig(strategy="auto"))
        if not res.roots:
            print(f"{lam:10.4g} {in_S_eta(lam, spec1d):>8} {'(' + res.status + ')':>16} {mu_exact:16.10g} {k:10.4g}")
            continue
        u = res.roots[0].u.values
        exact = closed_form_multipoint(spec1d, lam, x)
        nz = exact != 0
        err = np.max(np.abs(u[nz] - exact[nz]) / np.abs(exact[nz]))
        print(f"{lam:10.4g} {in_S_eta(lam, spec1d):>8} {res.roots[0].mu:16.10g} {mu_exact:16.10g} "
              f"{k:10.4g} {err:12.3e}")
    if math.isfinite(s_c):
        print("at lambda_c the affine slope is 1: no fixed point for g_R != 0, a line of them for g_R = 0")


if __name__ == "__main__":
    main()
