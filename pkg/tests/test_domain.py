import numpy as np
import pytest
from hypothesis import given, strategies as st

from smoothbackfit import Domain, InvalidArgumentError, integrate_1d, integrate_2d, make_uniform_grid
from smoothbackfit.domain import interpolate


def test_three_point_grid_has_trapezoid_weights():
    g = make_uniform_grid(Domain.unit(1), 3)[0]
    np.testing.assert_allclose(g.points, [0, 0.5, 1])
    np.testing.assert_allclose(g.weights, [0.25, 0.5, 0.25])


def test_two_point_grid_is_endpoints_only():
    g = make_uniform_grid(Domain(((0.0, 2.0),)), 2)[0]
    np.testing.assert_allclose(g.weights, [1.0, 1.0])


def test_each_axis_weights_sum_to_width():
    gs = make_uniform_grid(Domain.unit(2), 5)
    assert gs.d == 2 and gs.grid_size == 5
    for g in gs:
        assert g.weights.sum() == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("size", [1, 0, -3, 2.5])
def test_grid_size_below_two_is_rejected(size):
    with pytest.raises(InvalidArgumentError):
        make_uniform_grid(Domain.unit(1), size)


@pytest.mark.parametrize("bounds", [(), ((1.0, 1.0),), ((2.0, 1.0),), ((0.0, np.inf),)])
def test_invalid_domains_are_rejected(bounds):
    with pytest.raises(InvalidArgumentError):
        Domain(bounds)


def test_integrals_of_simple_polynomials():
    g = make_uniform_grid(Domain.unit(1), 101)[0]
    assert integrate_1d(np.ones(101), g) == pytest.approx(1.0, abs=1e-15)
    assert integrate_1d(g.points, g) == pytest.approx(0.5, abs=1e-15)
    assert abs(integrate_1d(g.points**2, g) - 1 / 3) < 1e-4


def test_length_mismatch_is_rejected():
    g = make_uniform_grid(Domain.unit(1), 11)[0]
    with pytest.raises(InvalidArgumentError):
        integrate_1d(np.ones(10), g)
    with pytest.raises(InvalidArgumentError):
        integrate_2d(np.ones((11, 10)), g, g)


def test_quadrature_error_is_second_order():
    errs = []
    for size in (51, 101, 201):
        g = make_uniform_grid(Domain.unit(1), size)[0]
        errs.append(abs(integrate_1d(g.points**2, g) - 1 / 3))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_2d_integral_of_product():
    gs = make_uniform_grid(Domain(((0.0, 1.0), (0.0, 2.0))), 21)
    vals = np.outer(gs[0].points, np.ones(21))
    assert integrate_2d(vals, gs[0], gs[1]) == pytest.approx(1.0)


@given(st.floats(-5, 5), st.floats(0.1, 10), st.integers(2, 60),
       st.floats(-3, 3), st.floats(-3, 3))
def test_trapezoid_exact_on_linear_functions(a, width, size, c0, c1):
    g = make_uniform_grid(Domain(((a, a + width),)), size)[0]
    b = a + width
    exact = c0 * width + c1 * (b**2 - a**2) / 2
    assert integrate_1d(c0 + c1 * g.points, g) == pytest.approx(exact, rel=1e-9, abs=1e-9)
    assert g.points[0] == a and g.points[-1] == pytest.approx(b)
    assert np.all(np.diff(g.points) > 0) and np.all(g.weights > 0)


def test_interpolation_is_exact_at_nodes_and_linear_between():
    g = make_uniform_grid(Domain.unit(1), 11)[0]
    vals = np.sin(g.points)
    np.testing.assert_array_equal(interpolate(vals, g, g.points), vals)
    mid = 0.5 * (g.points[3] + g.points[4])
    assert interpolate(vals, g, mid) == pytest.approx(0.5 * (vals[3] + vals[4]))


def test_contains_is_closed():
    dom = Domain.unit(2)
    np.testing.assert_array_equal(dom.contains([[0, 1], [0.5, 1.0001]]), [True, False])
