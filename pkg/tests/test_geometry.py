import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transgress.exterior import ChartDomain, KForm, SmoothMap
from transgress.geometry import (SPHERE_CHART, builtin_geometry, check_metric_and_frame,
                                 circle_flat, curvature_from_connection, ellipsoid, flat_box,
                                 frame_change, generic_connection, levi_civita_from_metric,
                                 sphere_round, stabilize, torsion_residual, torus_flat)
from transgress.harness.checks import random_rotation_field
from transgress.quadrature import integrate_over_atlas

RNG = np.random.default_rng(11)
BAND = ChartDomain(((0.2, np.pi - 0.2), (0.0, 2 * np.pi)), (False, True))
BAND_PTS = BAND.sample(100, RNG)


def antisymmetry(form: KForm, pts) -> float:
    v = form(pts)
    return float(np.abs(v + np.swapaxes(v, 1, 2)).max())


def test_flat_geometries_have_zero_connection():
    for geom in (circle_flat(), torus_flat(1.0, 2.0)):
        assert geom.charts[0].omega.is_zero
        assert geom.charts[0].Omega.is_zero


def test_sphere_curvature_integrates_to_four_pi():
    geom = sphere_round()
    value, _ = integrate_over_atlas(lambda c: geom.charts[c].Omega[0, 1], geom)
    assert abs(value - 4 * np.pi) < 1e-8


def test_sphere_curvature_is_the_area_form():
    # Gauss curvature 1: Ω[0,1] = sin t dt∧dφ
    Omega = sphere_round().charts[0].Omega
    np.testing.assert_allclose(Omega(BAND_PTS)[:, 0, 1, 0], np.sin(BAND_PTS[:, 0]), atol=1e-9)


@pytest.mark.parametrize("geom", [sphere_round(), ellipsoid(1, 1, 1.2), generic_connection(3, 2, seed=4)],
                         ids=["sphere", "ellipsoid", "generic"])
def test_connection_and_curvature_are_antisymmetric(geom):
    dom = geom.charts[0].domain
    pts = BAND_PTS if dom == SPHERE_CHART else dom.sample(100, RNG)
    assert antisymmetry(geom.charts[0].omega, pts) < 1e-9
    assert antisymmetry(geom.charts[0].Omega, pts) < 1e-9


def test_euclidean_metric_gives_zero_connection():
    dom = ChartDomain(((-1.0, 1.0), (-1.0, 1.0)))
    eye = lambda p: np.broadcast_to(np.eye(2), (p.shape[0], 2, 2)).astype(p.dtype)
    omega = levi_civita_from_metric(eye, dom, eye)
    assert np.abs(omega(dom.sample(50, RNG))).max() < 1e-14


def test_levi_civita_matches_closed_form_on_the_sphere():
    geom = sphere_round()
    chart = geom.charts[0]
    for derivative in ("complex", "central"):
        omega = levi_civita_from_metric(chart.metric, SPHERE_CHART, chart.frame, derivative=derivative)
        assert np.abs(omega(BAND_PTS) - chart.omega(BAND_PTS)).max() < 1e-6


def test_ellipsoid_connection_is_torsion_free():
    geom = ellipsoid(1, 1, 1.2)
    chart = geom.charts[0]
    assert torsion_residual(chart.metric, chart.frame, chart.omega, BAND_PTS) < 1e-5


def test_structure_equation_holds_on_a_generic_connection():
    geom = generic_connection(3, 2, seed=2)
    omega = geom.charts[0].omega
    pts = omega.domain.sample(50, RNG)
    Omega = curvature_from_connection(omega, 1e-4)
    assert np.abs(Omega(pts) - geom.charts[0].Omega(pts)).max() < 1e-6


def test_zero_connection_has_zero_curvature():
    dom = ChartDomain(((0.0, 1.0),) * 2)
    assert curvature_from_connection(KForm.zero(dom, 1, (2, 2))).is_zero


def test_metric_that_is_not_positive_definite_is_rejected():
    dom = ChartDomain(((-1.0, 1.0),))
    metric = lambda p: (p[:, 0] ** 2 - 0.5)[:, None, None]
    frame = lambda p: np.ones((p.shape[0], 1, 1))
    with pytest.raises(ValueError, match="positive definite at point"):
        check_metric_and_frame(metric, frame, dom)


def test_non_orthonormal_frame_is_rejected():
    dom = ChartDomain(((-1.0, 1.0),))
    metric = lambda p: np.full((p.shape[0], 1, 1), 4.0)
    frame = lambda p: np.ones((p.shape[0], 1, 1))
    with pytest.raises(ValueError, match="orthonormal"):
        check_metric_and_frame(metric, frame, dom)


@pytest.mark.parametrize("name,params", [("sphere_round", {"radius": -1.0}), ("ellipsoid", {"a": 1, "b": 0, "c": 1}),
                                         ("torus_flat", {"r1": 0.0, "r2": 1.0})])
def test_non_positive_parameters_are_rejected(name, params):
    with pytest.raises(ValueError, match="must be positive"):
        builtin_geometry(name, **params)


def test_unknown_geometry_lists_the_choices():
    with pytest.raises(ValueError, match="available"):
        builtin_geometry("klein_bottle")


def test_stabilize_places_the_connection_in_the_lower_block():
    geom = sphere_round()
    st_geom = stabilize(geom)
    omegaE, OmegaE = st_geom.connection(0)
    assert omegaE.shape == (3, 3)
    a, b = omegaE(BAND_PTS), geom.charts[0].omega(BAND_PTS)
    np.testing.assert_array_equal(a[:, 1:, 1:], b)
    for arr in (a, OmegaE(BAND_PTS)):
        assert np.all(arr[:, 0, :] == 0) and np.all(arr[:, :, 0] == 0)
    flat = stabilize(circle_flat())
    assert flat.connection(0)[0].shape == (2, 2) and flat.connection(0)[0].is_zero


def test_identity_frame_change_leaves_the_geometry_unchanged():
    geom = ellipsoid(1, 1, 1.2)
    ident = SmoothMap.constant(SPHERE_CHART, np.eye(2).ravel())
    changed = frame_change(geom, ident)
    for a, b in ((changed.charts[0].omega, geom.charts[0].omega), (changed.charts[0].Omega, geom.charts[0].Omega)):
        np.testing.assert_allclose(a(BAND_PTS), b(BAND_PTS), atol=1e-15)


def test_constant_rotation_conjugates_curvature_exactly():
    geom = generic_connection(3, 2, seed=1)
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))
    q *= np.sign(np.linalg.det(q))
    changed = frame_change(geom, SmoothMap.constant(geom.charts[0].domain, q.ravel()))
    pts = geom.charts[0].domain.sample(30, RNG)
    expect = np.einsum("ba,nbck,cd->nadk", q, geom.charts[0].Omega(pts), q)
    np.testing.assert_allclose(changed.charts[0].Omega(pts), expect, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_position_dependent_rotation_conjugates_curvature(seed):
    # the transformed Ω is g⁻¹Ωg; recomputing it from the transformed ω checks the g⁻¹dg term
    geom = sphere_round()
    g = random_rotation_field(SPHERE_CHART, 2, np.random.default_rng(seed))
    changed = frame_change(geom, g)
    rebuilt = curvature_from_connection(changed.charts[0].omega)
    G = g(BAND_PTS).reshape(-1, 2, 2)
    expect = np.einsum("nba,nbck,ncd->nadk", G, geom.charts[0].Omega(BAND_PTS), G)
    assert np.abs(rebuilt(BAND_PTS) - expect).max() < 1e-6
    assert np.abs(changed.charts[0].Omega(BAND_PTS) - expect).max() < 1e-12


def test_rotation_field_must_be_special_orthogonal():
    geom = flat_box(2, 1)
    reflection = SmoothMap.constant(geom.charts[0].domain, np.diag([1.0, -1.0]).ravel())
    with pytest.raises(ValueError, match="SO\\(2\\)"):
        frame_change(geom, reflection)


@pytest.mark.parametrize("h", [1e-4, 1e-5, 1e-6])
def test_gauss_bonnet_is_stable_under_the_step(h):
    for geom, chi in ((sphere_round(step=h), 2), (ellipsoid(1, 1, 1.2, step=h), 2), (torus_flat(step=h), 0)):
        value, _ = integrate_over_atlas(lambda c: geom.charts[c].Omega[0, 1] * (0.5 / np.pi), geom)
        assert abs(value - chi) < 1e-6
