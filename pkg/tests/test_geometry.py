import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlbvp.geometry import Domain, DomainError, Grid, dist_to_boundary, interior_region, m_xi

from conftest import SQUARE, UNIT


def test_domain_validation():
    with pytest.raises(DomainError):
        Domain.interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Domain(((0, 1), (0, 1), (0, 1)))
    assert SQUARE.kind == "rectangle" and UNIT.kind == "interval"
    assert Domain.rectangle((0, 2), (0, 1)).inradius == 0.5


@pytest.mark.parametrize(
    "domain, x, d",
    [(UNIT, 0.25, 0.25), (SQUARE, (0.5, 0.1), 0.1), (UNIT, 1.0, 0.0), (SQUARE, (0.3, 0.8), 0.2)],
)
def test_dist_to_boundary(domain, x, d):
    assert dist_to_boundary(domain, x) == pytest.approx(d, abs=1e-15)


def test_dist_outside_is_an_error():
    with pytest.raises(DomainError):
        dist_to_boundary(UNIT, 1.5)


def test_m_xi():
    assert m_xi(UNIT, [0.5]) == 0.5
    assert m_xi(UNIT, [0.25, 0.9]) == pytest.approx(0.1)
    assert m_xi(SQUARE, [(0.5, 0.5), (0.2, 0.7)]) == pytest.approx(0.2)
    for bad in ([], [1.0], [(0.5, 0.0)]):
        with pytest.raises(DomainError):
            m_xi(SQUARE if bad and isinstance(bad[0], tuple) else UNIT, bad)


def test_grid_basics():
    g = Grid(SQUARE, (5, 9))
    assert g.shape == (5, 9) and g.size == 45
    assert g.spacing.tolist() == [0.25, 0.125]
    assert g.points[1].tolist() == [0.0, 0.125]  # y index runs fastest
    assert g.boundary_mask.sum() == 45 - 3 * 7
    with pytest.raises(DomainError):
        Grid(UNIT, (2,))


def test_side_masks_share_corners():
    g = Grid(SQUARE, (4, 4))
    left, bottom = g.side_mask("left"), g.side_mask("bottom")
    assert (left & bottom).sum() == 1
    union = np.zeros(g.size, bool)
    for side in SQUARE.sides():
        union |= g.side_mask(side)
    assert np.array_equal(union, g.boundary_mask)


def test_quadrature_weights_integrate_bilinear_exactly():
    g = Grid(Domain.rectangle((0, 2), (-1, 1)), (7, 5))
    w = g.quadrature_weights()
    x, y = g.points.T
    assert w.sum() == pytest.approx(4.0)
    assert w @ (1 + x * y + 3 * x) == pytest.approx(4.0 + 3 * 2 * 2, rel=1e-14)


def test_interior_region_examples():
    g = Grid(UNIT, (11,))
    r = interior_region(g, 0.25)
    np.testing.assert_allclose(g.points[r.node_set, 0], [0.3, 0.4, 0.5, 0.6, 0.7])
    assert interior_region(g, 0.55).empty
    g2 = Grid(SQUARE, (11, 11))
    block = g2.points[interior_region(g2, 0.35).node_set]
    assert len(block) == 9
    np.testing.assert_allclose(np.unique(block[:, 0]), [0.4, 0.5, 0.6])
    with pytest.raises(DomainError):
        interior_region(g, 0.0)


# ---------------------------------------------------------------- properties

grids = st.one_of(
    st.tuples(st.integers(3, 40)).map(lambda n: Grid(UNIT, n)),
    st.tuples(st.integers(3, 20), st.integers(3, 20)).map(lambda n: Grid(Domain.rectangle((0, 1.5), (-1, 1)), n)),
)


@given(grids)
def test_boundary_mask_iff_zero_distance(g):
    assert np.array_equal(g.boundary_mask, g.distance == 0)


@given(grids)
def test_spacing_exact(g):
    for k, (lo, hi) in enumerate(g.domain.bounds):
        assert g.spacing[k] == (hi - lo) / (g.shape[k] - 1)
        assert g.axes[k][0] == lo and g.axes[k][-1] == hi


@given(grids, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_interior_region_antitone(g, a, b):
    d1, d2 = sorted((a * g.domain.inradius, b * g.domain.inradius))
    r1, r2 = interior_region(g, d1), interior_region(g, d2)
    assert set(r2.node_set) <= set(r1.node_set)
    keep = np.zeros(g.size, bool)
    keep[r1.node_set] = True
    assert np.all(g.distance[keep] > d1) and np.all(g.distance[~keep] <= d1)


@given(st.integers(1, 15).map(lambda k: 2 * k + 1), st.floats(0.01, 1.2))
def test_interior_region_empty_iff_delta_reaches_inradius(n, frac):
    g = Grid(SQUARE, (n, n))  # odd counts put a node at the centre
    delta = frac * SQUARE.inradius
    assert interior_region(g, delta).empty == (delta >= SQUARE.inradius)


@given(st.tuples(st.floats(0, 1), st.floats(0, 1)), st.tuples(st.floats(0, 1), st.floats(0, 1)))
def test_distance_is_one_lipschitz(p, q):
    dp, dq = dist_to_boundary(SQUARE, p), dist_to_boundary(SQUARE, q)
    assert abs(dp - dq) <= np.hypot(p[0] - q[0], p[1] - q[1]) + 1e-15
