import numpy as np
import pytest
from hypothesis import settings

from nlbvp import Domain, Grid, Nonlinearity, NonlocalFunctional, ProblemSpec, ScalarField

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")

UNIT = Domain.interval(0.0, 1.0)
SQUARE = Domain.rectangle((0.0, 1.0), (0.0, 1.0))


def linear_spec(lam, g="0", nonlocal_bc=None, domain=UNIT, h="0", D="1"):
    """-div(D grad u) + lam (u - h) = 0 with the given boundary data."""
    nl = Nonlinearity.parse(f"s - ({h})", h, 1.0)
    bc = nonlocal_bc if nonlocal_bc is not None else NonlocalFunctional.expression("0")
    return ProblemSpec(domain, ScalarField.parse(D), nl, ScalarField.parse(g), lam, bc)


def three_point_spec(lam, g_R=1.0):
    """Three-point problem u(0) = 0, u(1) = g_R + 4 u(0.75)."""
    bc = NonlocalFunctional.multipoint([4.0], [(0.75,)], sides=["right"])
    return linear_spec(lam, g=f"{g_R}*x", nonlocal_bc=bc)


def plate_spec(lam):
    """Unit square, h = 1 + x y, u = 0.5 u(0.5, 0.5) on the whole boundary."""
    bc = NonlocalFunctional.multipoint([0.5], [(0.5, 0.5)])
    nl = Nonlinearity.parse("s - (1 + x*y)", "1 + x*y", 1.0)
    return ProblemSpec(SQUARE, ScalarField.parse("1"), nl, ScalarField.parse("0"), lam, bc)


def sinh_profile(grid, lam, c=1.0):
    x = grid.points[:, 0]
    a = np.sqrt(lam)
    return c * np.sinh(a * x) / np.sinh(a)


@pytest.fixture
def unit():
    return UNIT


@pytest.fixture
def square():
    return SQUARE


def random_small_spec(rng, dim, presets=("linear", "cubic", "sinh")):
    """Random small problem: polynomial D > 0, preset f = a(x) phi(s - h), random g and beta."""
    from nlbvp import preset

    def coef():
        return f"{rng.uniform(-1, 1):.6f}"

    if dim == 1:
        domain, grid = UNIT, Grid(UNIT, (9,))
        D = f"1 + {rng.uniform(0, 1):.6f}*x^2"
        h = f"{coef()} + ({coef()})*x"
        a = f"1 + {rng.uniform(0, 2):.6f}*x"
        g = f"{coef()} + ({coef()})*x"
        xi = [(rng.uniform(0.2, 0.8),)]
    else:
        domain, grid = SQUARE, Grid(SQUARE, (5, 5))
        D = f"1 + {rng.uniform(0, 1):.6f}*x^2 + {rng.uniform(0, 1):.6f}*y"
        h = f"{coef()} + ({coef()})*x*y"
        a = f"1 + {rng.uniform(0, 2):.6f}*y^2"
        g = f"{coef()} + ({coef()})*x + ({coef()})*y"
        xi = [(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8))]
    name = presets[rng.integers(len(presets))]
    nl = preset(name, h, a=a, grid=grid)
    bc = NonlocalFunctional.multipoint([rng.uniform(-2, 2)], xi)
    spec = ProblemSpec(domain, ScalarField.parse(D), nl, ScalarField.parse(g), float(rng.uniform(1, 100)), bc)
    return spec, grid, float(rng.uniform(-1, 1))


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance lines collected by test_acceptance, if it ran."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for item in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[item])
