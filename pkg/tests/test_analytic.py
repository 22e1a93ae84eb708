import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from nlbvp import (
    MultipointSpec1D,
    NoUniqueSolution,
    closed_form_multipoint,
    eta,
    example22_solutions,
    find_eta_root,
    in_S_eta,
    lambda_star,
    multipoint_fixed_point,
)

THREE_POINT_1D = MultipointSpec1D(0.0, 1.0, 1.0, (4.0,), (0.75,))
# lambda_c frozen from an independent root of the exponential form (brentq, xtol 1e-14)
LAMBDA_C = 30.738825224417315


def eta_exp(s, spec):
    out = math.exp(s * (spec.R - spec.L)) - math.exp(-s * (spec.R - spec.L))
    for b, x in zip(spec.beta, spec.xi):
        out -= b * (math.exp(s * (x - spec.L)) - math.exp(-s * (x - spec.L)))
    return out


def test_eta_examples():
    assert eta(0.0, THREE_POINT_1D) == 0.0
    # 2 sinh 2 - 8 sinh 1.5 = 7.25372 - 17.03424
    assert eta(2.0, THREE_POINT_1D) == pytest.approx(-9.78051, abs=1e-5)
    assert eta(2.0, THREE_POINT_1D) == pytest.approx(eta_exp(2.0, THREE_POINT_1D), rel=1e-14)
    empty = MultipointSpec1D(0.0, 2.0, 1.0, (), ())
    assert eta(1.5, empty) == pytest.approx(2 * math.sinh(3.0))
    with pytest.raises(ValueError):
        eta(-1.0, THREE_POINT_1D)
    with pytest.raises(OverflowError):
        eta(800.0, THREE_POINT_1D)


def test_spec_validation():
    for bad in [dict(beta=(0.0,), xi=(0.5,)), dict(beta=(1.0,), xi=(1.0,)),
                dict(beta=(1.0, 1.0), xi=(0.6, 0.4)), dict(beta=(1.0,), xi=())]:
        with pytest.raises(ValueError):
            MultipointSpec1D(0.0, 1.0, 1.0, **bad)


def test_lambda_star_examples():
    assert lambda_star(THREE_POINT_1D) == pytest.approx((4 * math.log(4)) ** 2)
    assert lambda_star(THREE_POINT_1D) == pytest.approx(30.748, abs=1e-3)
    half = MultipointSpec1D(0.0, 1.0, 1.0, (0.5,), (0.5,))
    assert lambda_star(half) == pytest.approx(1.9218, abs=1e-4)
    assert lambda_star(MultipointSpec1D(0.0, 1.0, 1.0, (0.5, -0.5), (0.2, 0.4))) == 0.0


def test_eta_root_matches_independent_oracle():
    s_c = find_eta_root(THREE_POINT_1D, 20.0)
    assert isinstance(s_c, float)
    oracle = brentq(lambda s: eta_exp(s, THREE_POINT_1D), 1.0, math.sqrt(lambda_star(THREE_POINT_1D)), xtol=1e-14)
    assert s_c == pytest.approx(oracle, rel=1e-11)
    assert s_c**2 == pytest.approx(LAMBDA_C, rel=1e-11)
    assert abs(eta(s_c, THREE_POINT_1D)) <= 1e-9 * math.exp(s_c)
    assert 0 < s_c < math.sqrt(lambda_star(THREE_POINT_1D))
    assert in_S_eta(s_c**2, THREE_POINT_1D) == "boundary"


def test_eta_root_absent():
    small = MultipointSpec1D(0.0, 1.0, 1.0, (0.9, -2.0), (0.5, 0.8))
    assert small.positive_moment() <= 1.0
    assert find_eta_root(small, 50.0) is None
    assert find_eta_root(MultipointSpec1D(0.0, 1.0, 1.0, (), ()), 50.0) is None
    with pytest.raises(ValueError):
        find_eta_root(THREE_POINT_1D, 0.0)


def test_membership():
    assert in_S_eta(lambda_star(THREE_POINT_1D), THREE_POINT_1D) == "member"
    assert in_S_eta(100.0, THREE_POINT_1D) == "member"
    with pytest.raises(ValueError):
        in_S_eta(0.0, THREE_POINT_1D)


def test_closed_form_examples():
    assert closed_form_multipoint(THREE_POINT_1D, 100.0, 0.0) == 0.0
    expected = 2 * math.sinh(5) / (2 * math.sinh(10) - 8 * math.sinh(7.5))
    assert closed_form_multipoint(THREE_POINT_1D, 100.0, 0.5) == pytest.approx(expected, rel=1e-13)
    with pytest.raises(NoUniqueSolution, match="no solution"):
        closed_form_multipoint(THREE_POINT_1D, LAMBDA_C, 0.5)
    homog = MultipointSpec1D(0.0, 1.0, 0.0, (4.0,), (0.75,))
    with pytest.raises(NoUniqueSolution, match="infinitely many"):
        closed_form_multipoint(homog, LAMBDA_C, 0.5)


def test_fixed_point_formula_matches_closed_form():
    k, mu = multipoint_fixed_point(THREE_POINT_1D, 100.0)
    assert k == pytest.approx(4 * math.sinh(7.5) / math.sinh(10))
    assert THREE_POINT_1D.g_R + mu == pytest.approx(closed_form_multipoint(THREE_POINT_1D, 100.0, 1.0), rel=1e-12)


# ------------------------------------------------------------ properties


@given(st.floats(1.0, 1e4).filter(lambda lam: abs(lam - LAMBDA_C) > 1.0))
def test_closed_form_satisfies_boundary_condition(lam):
    u = lambda x: closed_form_multipoint(THREE_POINT_1D, lam, x)  # noqa: E731
    lhs = u(1.0) - THREE_POINT_1D.g_R - 4.0 * u(0.75)
    assert abs(lhs) <= 1e-12 * max(1.0, abs(u(1.0)))


@st.composite
def small_moment_specs(draw):
    m = draw(st.integers(1, 3))
    xi = sorted(draw(st.lists(st.floats(0.05, 0.95), min_size=m, max_size=m, unique=True)))
    if min(np.diff(xi), default=1.0) < 1e-3:
        xi = list(np.linspace(0.2, 0.8, m))
    beta = [draw(st.floats(-3.0, 3.0).filter(lambda b: abs(b) > 1e-3)) for _ in range(m)]
    pos = sum(max(b, 0) * x for b, x in zip(beta, xi))
    if pos > 1.0:
        beta = [b / (pos * 1.01) if b > 0 else b for b in beta]
    return MultipointSpec1D(0.0, 1.0, 1.0, tuple(beta), tuple(xi))


@given(small_moment_specs(), st.floats(1e-6, 1e4))
def test_eta_positive_for_small_moment(spec, lam):
    assert spec.positive_moment() <= 1.0
    assert eta(math.sqrt(lam), spec) > 0
    assert in_S_eta(lam, spec) == "member"


# ------------------------------------------------------------ second example


def test_sqrt_solutions():
    (zero, z1), (u, u1) = example22_solutions("sqrt", 25.0)
    assert z1 == 0.0 and np.all(zero(np.linspace(0, 1, 7)) == 0)
    assert u1 == pytest.approx(math.tanh(2.5) / 5, rel=1e-14)
    assert u1 == pytest.approx(0.197322, abs=1e-6)
    integral, _ = quad(lambda x: abs(u(x)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14)
    assert abs(u1**2 - integral) <= 1e-12
    assert float(u(1.0)) == pytest.approx(u1, rel=1e-14)


def test_quadratic_solutions():
    (_, z1), (u, u1) = example22_solutions("quadratic", 400.0)
    assert z1 == 0.0
    assert 0.99 <= u1 / 40 <= 1.01
    integral, _ = quad(lambda x: u(x) ** 2, 0.0, 1.0, limit=200, epsrel=1e-13)
    assert u1 == pytest.approx(integral, rel=1e-10)
    with pytest.raises(ValueError):
        example22_solutions("cubic", 4.0)
    with pytest.raises(OverflowError):
        example22_solutions("quadratic", 4e5)


@pytest.mark.parametrize("kind", ["sqrt", "quadratic"])
@pytest.mark.parametrize("lam", [4.0, 100.0, 900.0])
def test_closed_forms_solve_the_ode(kind, lam):
    n = 2049
    x = np.linspace(0.0, 1.0, n)
    h = x[1] - x[0]
    u = example22_solutions(kind, lam)[1][0](x)
    res = -(u[:-2] - 2 * u[1:-1] + u[2:]) / h**2 + lam * u[1:-1]
    # second-difference truncation error is h^2 u'''' / 12 = h^2 lam^2 u / 12
    assert np.abs(res).max() <= h**2 * lam**2 * np.abs(u).max() / 12 * 1.01
