"""Acceptance criteria, one test per item.

Each test records a single PASS/FAIL line, printed in the terminal summary (and
directly when this file is run as a script).
"""

import math

import numpy as np
import pytest

from nlbvp import (
    FixedPointConfig,
    Grid,
    MultipointSpec1D,
    NonlocalFunctional,
    ScalarField,
    check_boundary_limit,
    check_contraction_decay,
    check_interior_limit,
    check_maximum_principle,
    check_mu_monotonicity,
    closed_form_multipoint,
    estimate_contraction,
    example22_solutions,
    find_eta_root,
    fit_layer_decay,
    fixed_point_solve,
    lambda_star,
    solve_dense_oracle,
    solve_local_dirichlet,
)
from nlbvp.cli import EXIT_NO_ROOT, main
from nlbvp.local_solver import GridFunction
from nlbvp.nonlocal_bc import TMap
from nlbvp.verify import solve_runs

from conftest import SQUARE, UNIT, three_point_spec, linear_spec, plate_spec, random_small_spec

THREE_POINT_1D = MultipointSpec1D(0.0, 1.0, 1.0, (4.0,), (0.75,))
N_FINE = 4097
RESULTS: dict[int, str] = {}


def record(item, ok, detail):
    RESULTS[item] = f"{'PASS' if ok else 'FAIL'} item {item}: {detail}"
    print(RESULTS[item])
    assert ok, RESULTS[item]


@pytest.fixture(scope="module")
def plate_runs():
    """Item-4 solutions at lambda = 100, 400, 1600 on the recommended grids."""
    return solve_runs(plate_spec(1.0), [100.0, 400.0, 1600.0])


def sqrt_bc():
    return NonlocalFunctional.expression("sqrt(I)", weight="1", transform="abs(s)", sides=["right"])


def quadratic_bc():
    return NonlocalFunctional.expression("I", weight="1", transform="s^2", sides=["right"])


# ---------------------------------------------------------------- item 1


def test_item1_three_point_reproduction():
    s_c = find_eta_root(THREE_POINT_1D, 50.0)
    lam_c = s_c**2
    lam_star = lambda_star(THREE_POINT_1D)
    grid = Grid(UNIT, (N_FINE,))
    res = fixed_point_solve(three_point_spec(100.0), grid, FixedPointConfig(strategy="picard"))
    u = res.roots[0].u.values
    exact = closed_form_multipoint(THREE_POINT_1D, 100.0, grid.points[:, 0])
    inner = np.abs(exact) > 0
    rel = float(np.max(np.abs(u[inner] - exact[inner]) / np.abs(exact[inner])))
    slope = estimate_contraction(three_point_spec(lam_c), grid, 0.0, 1.0)
    ok = (
        res.status == "Converged"
        and abs(lam_star - (4 * math.log(4)) ** 2) <= 1e-12 * lam_star
        and 0 < lam_c < lam_star
        and rel <= 1e-4
        and abs(slope - 1.0) <= 1e-2
        and u[0] == 0.0
    )
    record(1, ok, f"lambda_c={lam_c:.9g}, lambda*={lam_star:.6g}, max rel err={rel:.2e}, "
                  f"slope at lambda_c={slope:.7f}")


# ---------------------------------------------------------------- item 2


def test_item2_nonexistence_and_multiplicity(tmp_path, capsys):
    cfg = tmp_path / "critical.cfg"
    s_c = find_eta_root(THREE_POINT_1D, 50.0)
    base = (
        'problem.domain = "(0, 1)"\nproblem.f = "s"\nproblem.h = "0"\nproblem.theta0 = 1\n'
        f"problem.lambda = {s_c**2!r}\n"
        'nonlocal.kind = "multipoint"\nnonlocal.beta = "4"\nnonlocal.xi = "0.75"\n'
        'nonlocal.sides = "right"\ngrid.nodes = 4097\n'
    )
    cfg.write_text(base + 'problem.g = "x"\n')
    code = main(["solve", str(cfg), "--no-timestamp"])
    capsys.readouterr()
    grid = Grid(UNIT, (N_FINE,))
    picard = fixed_point_solve(three_point_spec(s_c**2), grid, FixedPointConfig(strategy="picard"))
    scan = fixed_point_solve(three_point_spec(s_c**2, g_R=0.0), grid, FixedPointConfig(strategy="bracket"))
    worst = float(np.max(np.abs(scan.scan_F) / (1 + np.abs(scan.scan_mu))))
    ok = code == EXIT_NO_ROOT and picard.status == "Diverged" and worst <= 1e-6
    record(2, ok, f"g_R=1 exit {code}, Picard {picard.status}; g_R=0 max |F|/(1+|mu|) = {worst:.2e} "
                  f"over {len(scan.scan_mu)} scan points")


# ---------------------------------------------------------------- item 3


def test_item3_integral_multiplicity():
    grid = Grid(UNIT, (N_FINE,))
    x = grid.points[:, 0]
    sq = fixed_point_solve(linear_spec(25.0, nonlocal_bc=sqrt_bc()), grid, FixedPointConfig(strategy="bracket"))
    mus = [r.mu for r in sq.roots]
    (_, _), (u_exact, u1) = example22_solutions("sqrt", 25.0)
    sq_ok = len(mus) == 2 and abs(mus[0]) <= 1e-4 and abs(mus[1] - u1) <= 1e-4
    err = float(np.abs(sq.roots[-1].u.values - u_exact(x)).max()) if sq_ok else math.inf
    quad = fixed_point_solve(linear_spec(400.0, nonlocal_bc=quadratic_bc()), grid,
                             FixedPointConfig(strategy="bracket", bracket=100.0))
    q_mus = [r.mu for r in quad.roots]
    ratio = q_mus[-1] / 40.0 if q_mus else math.nan
    picard = fixed_point_solve(linear_spec(400.0, nonlocal_bc=quadratic_bc()), grid,
                               FixedPointConfig(strategy="picard", mu0=0.5))
    missed = all(abs(r.mu - q_mus[-1]) > 1.0 for r in picard.roots) if q_mus else False
    ok = (sq_ok and err <= 1e-4 and len(q_mus) == 2 and 0.99 <= ratio <= 1.01
          and quad.roots[-1].stability == "repelling" and missed)
    record(3, ok, f"sqrt roots {[round(m, 7) for m in mus]}, profile err {err:.2e}; quadratic roots "
                  f"{[round(m, 4) for m in q_mus]}, mu/(2 sqrt lam)={ratio:.5f}, "
                  f"{quad.roots[-1].stability if q_mus else '-'}, Picard from 0.5 -> "
                  f"{[round(r.mu, 6) for r in picard.roots] or picard.status}")


# ---------------------------------------------------------------- item 4


def test_item4_interior_limit_2d(plate_runs):
    res = check_interior_limit(plate_runs, 0.25)
    e100, e400, e1600 = res.measured["error"]
    floor = 1e-6
    halving = e1600 <= max(0.5 * e400, floor) and 0.5 * e400 <= max(0.25 * e100, floor)
    strict = e100 > e400 > e1600 or (e100 > e400 and e1600 <= floor)
    ok = res.passed and strict and halving
    record(4, ok, f"e(100)={e100:.3e}, e(400)={e400:.3e}, e(1600)={e1600:.3e}")


# ---------------------------------------------------------------- item 5


def test_item5_layer_decay(plate_runs):
    u2d = plate_runs[-1]
    fit2d = fit_layer_decay(u2d.u, u2d.spec.nonlinearity.root, 1600.0)
    grid = Grid(UNIT, (N_FINE,))
    u1d = GridFunction(grid, closed_form_multipoint(THREE_POINT_1D, 400.0, grid.points[:, 0]))
    fit1d = fit_layer_decay(u1d, ScalarField.parse("0"), 400.0)
    ok = (fit2d.slope < 0 and fit2d.r_squared >= 0.9 and fit1d.slope < 0 and fit1d.r_squared >= 0.9
          and -1.1 <= fit1d.slope <= -0.9)
    record(5, ok, f"2D slope {fit2d.slope:.4f} R2 {fit2d.r_squared:.4f}; "
                  f"1D slope {fit1d.slope:.4f} R2 {fit1d.r_squared:.4f}")


# ---------------------------------------------------------------- item 6


def test_item6_mu_monotonicity():
    res = check_mu_monotonicity(plate_spec(1.0), None, (0.0, 1.0), [100.0, 400.0, 1600.0])
    rows = res.measured["rows"]
    lo = min(r["min_diff"] for r in rows)
    hi = max(r["max_diff"] for r in rows)
    fits = ", ".join(f"{r['slope']:.3f}/{r['r_squared']:.3f}" for r in rows)
    ok = res.status == "pass" and lo >= -1e-8 and hi <= 1 + 1e-8
    record(6, ok, f"diff in [{lo:.3e}, {hi:.12f}], envelope slope/R2 {fits}")


# ---------------------------------------------------------------- item 7


def test_item7_maximum_principle():
    out = []
    for beta, side in ((3.0, "max"), (-3.0, "min")):
        spec = linear_spec(1000.0, h="1", domain=SQUARE,
                           nonlocal_bc=NonlocalFunctional.multipoint([beta], [(0.5, 0.5)]))
        grid = Grid(SQUARE, (129, 129))
        root = fixed_point_solve(spec, grid).roots[0]
        chk = check_maximum_principle(root.u, side, spec)
        out.append((side, root.mu, chk))
    ok = all(c.status == "pass" and c.measured["hypothesis_met"] for _, _, c in out)
    detail = "; ".join(f"{s}: mu={mu:.6g}, argext {c.measured['argext']} on boundary="
                       f"{c.measured['on_boundary']}, {c.status}" for s, mu, c in out)
    record(7, ok, detail)


# ---------------------------------------------------------------- item 8


def test_item8_boundary_limit_and_contraction():
    lams = [1e2, 1e3, 1e4]
    spec = plate_spec(1.0)
    b = check_boundary_limit(solve_runs(spec, lams), spec)
    c = check_contraction_decay(spec, lams, final_bound=0.5)
    bh = b.measured["B_of_h"]
    rates = c.measured["rate"]
    ok = b.status == "pass" and c.status == "pass" and abs(bh - 0.625) <= 1e-12 and rates[-1] < 0.5
    record(8, ok, f"B[h]={bh:.6g}, b(lambda)={[f'{v:.2e}' for v in b.measured['deviation']]}, "
                  f"M(lambda)={[f'{v:.2e}' for v in rates]} (2D)")


# ---------------------------------------------------------------- item 9


def test_item9_dense_oracle():
    rng = np.random.default_rng(20261015)
    worst = 0.0
    for k in range(10):
        spec, grid, mu = random_small_spec(rng, 1 if k < 5 else 2, presets=("linear",))
        diff = solve_local_dirichlet(spec, grid, mu).values - solve_dense_oracle(spec, grid, mu).values
        worst = max(worst, float(np.abs(diff).max()))
    record(9, worst <= 1e-9, f"max nodal difference over 10 random specs = {worst:.2e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
