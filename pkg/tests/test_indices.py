import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transgress.harness.scenarios import complex_power_field
from transgress.indices import (DegreeNotResolved, IsolatedZero, degree_integral, index, index_by_degree,
                                index_nondegenerate, sum_indices, winding_number)
from transgress.quadrature import QuadratureSpec


def test_nondegenerate_signs():
    assert index_nondegenerate(IsolatedZero((0, 0), 0.5, ((1, 0), (0, 1)))) == 1
    assert index_nondegenerate(IsolatedZero((0, 0), 0.5, ((1, 0), (0, -1)))) == -1
    for c, sign in ((0.7, 1), (-0.7, -1)):
        z = IsolatedZero((0, 0, 0), 0.5, ((1, 0, 0), (0, 1, 0), (0, 0, 2 * c)))
        assert index_nondegenerate(z) == sign


def test_singular_jacobian_defers_to_the_degree_integral():
    with pytest.raises(ValueError, match="use degree integral"):
        index_nondegenerate(IsolatedZero((0, 0), 0.5, ((1, 0), (0, 0))))
    with pytest.raises(ValueError, match="use degree integral"):
        index_nondegenerate(IsolatedZero((0, 0), 0.5))


@pytest.mark.parametrize("d", [-3, -2, -1, 1, 2, 3])
def test_degree_of_planar_powers_matches_winding(d):
    field = complex_power_field(d)
    assert index_by_degree(field, (0, 0), 0.5, 2) == winding_number(field, (0, 0), 0.5) == d


def test_identity_field_in_three_dimensions():
    assert index_by_degree(lambda p: p, (0, 0, 0), 0.3, 3) == 1
    assert sum_indices([IsolatedZero((0, 0, 0), 0.5)], lambda p: p) == 1


def test_degenerate_three_dimensional_zero():
    # (x, y, z²) has a degenerate zero of index 0 at the origin
    field = lambda p: np.stack([p[:, 0], p[:, 1], p[:, 2] ** 2], 1)
    assert index(IsolatedZero((0, 0, 0), 0.4, ((1, 0, 0), (0, 1, 0), (0, 0, 0))), field) == 0


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(
    lambda m: abs(m[0] * m[3] - m[1] * m[2]) > 0.05 and np.linalg.cond(np.reshape(m, (2, 2))) < 4))
def test_linear_fields_agree_between_routes(m):
    # strongly anisotropic fields need a finer grid, see the refinement test below
    a = np.reshape(m, (2, 2))
    field = lambda p: p @ a.T
    z = IsolatedZero((0.1, -0.2), 0.5, tuple(map(tuple, a)))
    shifted = lambda p: field(p - np.array(z.location))
    assert index_nondegenerate(z) == index_by_degree(shifted, z.location, 0.25, 2)


SQUASHED = np.array([[0.0, 1.0], [0.0625, 0.0]])


def test_unresolved_degree_raises():
    with pytest.raises(DegreeNotResolved, match="refine quadrature"):
        index_by_degree(lambda p: p @ SQUASHED.T, (0, 0), 0.25, 2)


def test_refining_resolves_an_anisotropic_zero():
    z = IsolatedZero((0, 0), 0.5, tuple(map(tuple, SQUASHED)))
    assert index_by_degree(lambda p: p @ SQUASHED.T, (0, 0), 0.25, 2, QuadratureSpec(order=64)) \
        == index_nondegenerate(z) == -1


def test_degree_integral_reports_its_estimate():
    value, err = degree_integral(lambda p: p, (0, 0, 0), 1.0, 3)
    assert abs(value - 1) < 1e-9 and err < 1e-9


def test_overlapping_isolation_balls_are_rejected():
    zeros = [IsolatedZero((0, 0), 0.5), IsolatedZero((0.6, 0), 0.5)]
    with pytest.raises(ValueError, match="overlap"):
        sum_indices(zeros, lambda p: p)


def test_non_isolated_zero_is_rejected():
    # vanishes on the whole half-plane x < 0
    field = lambda p: np.stack([np.maximum(p[:, 0], 0.0), np.zeros(p.shape[0])], 1)
    with pytest.raises(ValueError, match="not isolated"):
        sum_indices([IsolatedZero((0, 0), 0.5)], field)
