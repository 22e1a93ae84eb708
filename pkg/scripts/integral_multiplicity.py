"""Two solutions of -u'' + lam u = 0, u(0) = 0 with an integral condition at x = 1.

sqrt case:      u(1) = sqrt(int |u|)   roots 0 and tanh(sqrt(lam)/2)/sqrt(lam)
quadratic case: u(1) = int u^2         roots 0 and a branch growing like 2 sqrt(lam)

    python scripts/integral_multiplicity.py --kind quadratic --lams 100 400 1600
"""

import argparse
import math

from nlbvp import FixedPointConfig, Grid, NonlocalFunctional, Nonlinearity, ProblemSpec, ScalarField
from nlbvp import example22_solutions, fixed_point_solve
from nlbvp.geometry import Domain

BC = {
    "sqrt": ("sqrt(I)", "abs(s)"),
    "quadratic": ("I", "s^2"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--kind", choices=sorted(BC), default="sqrt")
    ap.add_argument("--lams", type=float, nargs="+", default=[25.0, 100.0, 400.0])
    ap.add_argument("--nodes", type=int, default=4097)
    args = ap.parse_args()

    expr, phi = BC[args.kind]
    bc = NonlocalFunctional.expression(expr, weight="1", transform=phi, sides=["right"])
    domain = Domain.interval(0.0, 1.0)
    grid = Grid(domain, (args.nodes,))
    print(f"{'lambda':>8} {'roots (numeric)':>34} {'u(1) exact':>14} {'stability':>22}")
    for lam in args.lams:
        exact = example22_solutions(args.kind, lam)[1][1]
        spec = ProblemSpec(domain, ScalarField.parse("1"), Nonlinearity.parse("s", "0", 1.0),
                           ScalarField.parse("0"), lam, bc)
        # the nontrivial quadratic root sits near 2 sqrt(lam)
        bracket = max(10.0, 5 * math.sqrt(lam)) if args.kind == "quadratic" else 10.0
        res = fixed_point_solve(spec, grid, FixedPointConfig(strategy="bracket", bracket=bracket))
        roots = ", ".join(f"{r.mu:.8g}" for r in res.roots)
        kinds = ", ".join(r.stability for r in res.roots)
        print(f"{lam:8.4g} {roots:>34} {exact:14.8g} {kinds:>22}")


if __name__ == "__main__":
    main()
