"""Large-lambda behaviour on the unit square.

Problem: -Laplace u + lam (u - h) = 0 with h = 1 + x y and u = 0.5 u(0.5, 0.5)
on the whole boundary. Runs the interior and boundary limits, the layer fit,
mu-monotonicity, the maximum principle and contraction decay, then writes one
JSON report.

    python scripts/limits_2d.py --lams 100 400 1600 --out report.json
"""

import argparse

from nlbvp import (
    NonlocalFunctional,
    Nonlinearity,
    ProblemSpec,
    ScalarField,
    VerificationReport,
    check_boundary_limit,
    check_contraction_decay,
    check_interior_limit,
    check_maximum_principle,
    check_mu_monotonicity,
    fit_layer_decay,
)
from nlbvp.geometry import Domain
from nlbvp.verify import PASS, FAIL, CheckResult, solve_runs, spec_id


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lams", type=float, nargs="+", default=[100.0, 400.0, 1600.0])
    ap.add_argument("--delta", type=float, default=0.25)
    ap.add_argument("--out", help="write the JSON report here")
    args = ap.parse_args()

    square = Domain.rectangle((0.0, 1.0), (0.0, 1.0))
    spec = ProblemSpec(square, ScalarField.parse("1"), Nonlinearity.parse("s - (1 + x*y)", "1 + x*y", 1.0),
                       ScalarField.parse("0"), args.lams[0], NonlocalFunctional.multipoint([0.5], [(0.5, 0.5)]))
    runs = solve_runs(spec, args.lams)
    report = VerificationReport(spec_id(spec))
    report.add(check_interior_limit(runs, args.delta))
    report.add(check_boundary_limit(runs, spec))
    last = runs[-1]
    fit = fit_layer_decay(last.u, spec.nonlinearity.root, last.lam)
    report.add(CheckResult("layer_decay", PASS if fit.slope < 0 and fit.r_squared >= 0.9 else FAIL,
                           measured=dict(fit.summary(), **{"lambda": last.lam}),
                           thresholds={"min_r_squared": 0.9}))
    report.add(check_mu_monotonicity(spec, None, (0.0, 1.0), args.lams))
    for side in ("max", "min"):
        report.add(check_maximum_principle(last.u, side, spec))
    report.add(check_contraction_decay(spec, args.lams))
    print(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())


if __name__ == "__main__":
    main()
