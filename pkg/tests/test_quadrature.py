import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transgress.exterior import ChartDomain, KForm
from transgress.geometry import Region, circle_flat, sphere_round, torus_flat
from transgress.quadrature import (QuadratureSpec, axis_rule, boundary_integral, check_disjoint,
                                   integrate, integrate_function, integrate_over_atlas)


def area_forms(geom):
    """Riemannian area (or length) form from the chart metric."""
    def form(c):
        chart = geom.charts[c]
        vol = lambda p: np.sqrt(np.linalg.det(chart.metric(p)))
        return KForm.from_coeffs(chart.domain, geom.dim, {tuple(range(geom.dim)): vol})
    return form


def test_sphere_area_at_order_32():
    geom = sphere_round()
    value, err = integrate_over_atlas(area_forms(geom), geom, QuadratureSpec(order=32))
    assert abs(value - 4 * np.pi) < 1e-8
    assert err < 1e-8


def test_torus_area_and_circle_length():
    geom = torus_flat(1.0, 2.0)
    value, _ = integrate_over_atlas(area_forms(geom), geom)
    assert abs(value - (2 * np.pi) ** 2 * 2.0) < 1e-10
    circle = circle_flat(3.0)
    value, _ = integrate_over_atlas(area_forms(circle), circle)
    assert abs(value - 6 * np.pi) < 1e-10


def test_normalized_angle_integrates_to_one_exactly():
    dom = ChartDomain(((0.0, 2 * np.pi),), (True,))
    value, err = integrate(KForm.from_coeffs(dom, 1, {(0,): 1 / (2 * np.pi)}))
    assert abs(value - 1.0) < 1e-15
    assert err < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 30), st.lists(st.floats(-3, 3), min_size=60, max_size=60))
def test_gauss_legendre_is_exact_to_degree_2n_minus_1(n, coefs):
    c = np.asarray(coefs[:2 * n])
    nodes, weights = axis_rule(-1.0, 1.0, False, QuadratureSpec(order=n))
    approx = weights @ np.polynomial.polynomial.polyval(nodes, c)
    antider = np.polynomial.polynomial.polyint(c)
    exact = np.polynomial.polynomial.polyval(1.0, antider) - np.polynomial.polynomial.polyval(-1.0, antider)
    assert abs(approx - exact) <= 1e-12 * (1 + np.abs(c).sum())


def test_subdivision_shrinks_the_error_estimate():
    dom = ChartDomain(((0.0, 3.0),))
    fn = lambda p: np.exp(np.sin(3 * p[:, 0]))
    # coarse cells are pre-asymptotic; from 8 cells on the estimate decays at least as h⁴
    errs = [integrate_function(fn, dom, QuadratureSpec(order=4, subdivision=k))[1] for k in (8, 16, 32)]
    assert errs[0] / errs[1] >= 4
    assert errs[1] / errs[2] >= 4


def test_reversing_an_axis_flips_the_sign():
    fwd = ChartDomain(((0.0, 1.0), (0.0, 2.0)))
    form = KForm.from_coeffs(fwd, 2, {(0, 1): lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1])})
    flipped = KForm.from_coeffs(fwd, 2, {(0, 1): lambda p: -np.exp(1 - p[:, 0]) * np.cos(p[:, 1])})
    # flipped is the pullback along x -> 1 - x, which reverses orientation
    a, _ = integrate(form)
    b, _ = integrate(flipped)
    assert a == pytest.approx(-b, abs=1e-14)


def test_degree_mismatch_is_rejected():
    dom = ChartDomain(((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        integrate(KForm.from_coeffs(dom, 1, {(0,): 1.0}))


def test_overlapping_regions_are_rejected():
    dom = ChartDomain(((0.0, 1.0),))
    regions = (Region(0, ChartDomain(((0.0, 0.6),))), Region(0, ChartDomain(((0.5, 1.0),))))
    with pytest.raises(ValueError, match="overlapping integration ranges"):
        check_disjoint(regions)
    assert dom.dim == 1


def test_constant_form_has_zero_boundary_integral():
    dom = ChartDomain(((0.0, 0.5),) * 3)
    form = KForm.from_coeffs(dom, 2, {(0, 1): 1.0, (0, 2): -2.0, (1, 2): 0.5})
    value, _ = boundary_integral(form)
    assert abs(value) < 1e-15


def test_exact_one_form_telescopes():
    dom = ChartDomain(((0.2, 1.3),))
    f = KForm.function(dom, lambda p: np.sin(p[:, 0]))
    value, _ = boundary_integral(f)
    assert value == pytest.approx(np.sin(1.3) - np.sin(0.2), abs=1e-15)


def test_stokes_on_a_cube():
    dom = ChartDomain(((0.0, 1.0),) * 3)
    # d(x y² dy∧dz + z e^x dx∧dy) = (y² + e^x) dx∧dy∧dz
    form = KForm.from_coeffs(dom, 2, {(1, 2): lambda p: p[:, 0] * p[:, 1] ** 2,
                                       (0, 1): lambda p: p[:, 2] * np.exp(p[:, 0])})
    value, _ = boundary_integral(form, spec=QuadratureSpec(order=8))
    assert value == pytest.approx(1 / 3 + np.e - 1, abs=1e-13)
