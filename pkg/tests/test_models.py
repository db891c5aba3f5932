import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusplab.errors import BadParameters, OutOfChart
from cusplab.flow import UnitTangentState, integrate_geodesic
from cusplab.metric import PlaneSpec, curvature_tensor, evaluate_jet, sectional_curvature
from cusplab.models import (
    ProductCuspModel,
    RevolutionProfile,
    WPModelM11,
    boundary_distance_product,
    boundary_neighborhood_volume,
    cusp_distance,
    fenchel_nielsen_model,
    fenchel_nielsen_pullback,
    lambda_field,
    product_cusp_metric,
    product_volume_closed_form,
    revolution_metric,
    wp_model_metric,
)


def test_revolution_metric_values():
    g = revolution_metric(RevolutionProfile(4, 0.5, 0.1), 0.5)
    assert np.allclose(np.diag(g), [1.25, 0.00390625], rtol=0, atol=1e-15)


def test_revolution_chart_edges():
    prof = RevolutionProfile(4, 0.5, 0.1)
    revolution_metric(prof, 0.5)
    with pytest.raises(OutOfChart):
        revolution_metric(prof, 0.0)


@pytest.mark.parametrize("r", [3.5, 4.0, 6.0])
def test_revolution_kernel_curvature_grid(r):
    prof = RevolutionProfile(r, 1.0, 0.1)
    for x in np.geomspace(0.02, 0.5, 25):
        jet = evaluate_jet(prof, [x, 0.0])
        k = sectional_curvature(curvature_tensor(jet), jet, PlaneSpec([1, 0], [0, 1]))
        kc = -r * (r - 1) / (x**2 * (1 + (r * x ** (r - 1)) ** 2) ** 2)
        assert k == pytest.approx(kc, rel=1e-6)


def test_cusp_distance_values():
    prof = RevolutionProfile(4, 0.5, 0.1)
    assert cusp_distance(prof, 0.0) == 0.0
    # series 1 + 8 x^6 - ... integrates to x + 8 x^7 / 7 at leading order
    assert cusp_distance(prof, 0.1) == pytest.approx(0.1 + 8e-7 / 7, abs=1e-12)


def test_cusp_distance_matches_radial_geodesic():
    prof = RevolutionProfile(4, 0.5, 0.1)
    x1, x2 = 0.05, 0.3
    e = 1.0 + (4 * x2**3) ** 2
    traj = integrate_geodesic(prof, UnitTangentState(np.array([x2, 0.0]), np.array([-1 / np.sqrt(e), 0.0])), 1.0, 1e-11, margin_floor=x1)
    assert traj.status == "boundary"
    assert traj.t_end == pytest.approx(cusp_distance(prof, x2) - cusp_distance(prof, x1), abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.0, 0.49), b=st.floats(0.0, 0.49))
def test_cusp_distance_monotone_and_lipschitz(a, b):
    prof = RevolutionProfile(4, 0.5, 0.1)
    lo, hi = sorted((a, b))
    assert cusp_distance(prof, hi) - cusp_distance(prof, lo) >= hi - lo - 1e-14


def test_wp_model_values():
    assert np.allclose(wp_model_metric(WPModelM11(), 4j), np.eye(2) / 64)
    wp = WPModelM11(2.0)
    assert wp.vertical_ray_length() == pytest.approx(2 / np.sqrt(2.0), rel=1e-10)
    with pytest.raises(BadParameters):
        WPModelM11(1.0)


def test_wp_curvature_tracks_length():
    wp = WPModelM11()
    for y in (1.6, 3.0, 10.0):
        jet = evaluate_jet(wp, [0.1, y])
        k = sectional_curvature(curvature_tensor(jet), jet, PlaneSpec([1, 0], [0, 1]))
        assert k == pytest.approx(-1.5 * y, rel=1e-6)


def test_fenchel_nielsen():
    assert fenchel_nielsen_model(3j)[1] == 0.0
    assert fenchel_nielsen_model(1 + 2j) == pytest.approx((0.5, 0.5))
    for z in (0.1 + 1.7j, -0.3 + 4j):
        assert fenchel_nielsen_pullback(z) == pytest.approx(1 / (2 * z.imag**3), rel=1e-8)
        # the model Kaehler form is dx dy / y^3: constant mismatch of 2
        assert (1 / z.imag**3) / fenchel_nielsen_pullback(z) == pytest.approx(2.0, rel=1e-8)


def test_product_metric_values():
    m = ProductCuspModel(1)
    assert np.allclose(product_cusp_metric(m, [0.1, 0.0]), np.pi**3 * np.diag([4.0, 1e-6]))
    with pytest.raises(OutOfChart):
        m.metric([0.0, 0.0])


def test_lambda_field_normalization():
    m = ProductCuspModel(2)
    for p in ([0.1, 0.0, 1.0, 3.0], [1.7, 2.0, 0.02, 0.0]):
        g = m.metric(p)
        l0, jl0 = lambda_field(m, p, 0)
        l1, _ = lambda_field(m, p, 1)
        assert l0 @ g @ l0 == pytest.approx(1 / (2 * np.pi), rel=1e-14)
        assert l0 @ g @ l1 == 0.0
        assert abs(l0 @ g @ jl0) <= 1e-16
        assert jl0 @ g @ jl0 == pytest.approx(1 / (2 * np.pi), rel=1e-12)


def test_boundary_distance():
    m = ProductCuspModel(1)
    d, comp = boundary_distance_product(m, [0.1, 0.0])
    assert d == pytest.approx(2 * np.pi**1.5 * 0.1, rel=1e-14)
    assert d == pytest.approx(comp, abs=1e-10)


def test_boundary_volume_scaling_and_closed_form():
    m = ProductCuspModel(1)
    assert boundary_neighborhood_volume(m, 0.0) == 0.0
    for rho in (1.0, 0.5, 0.25):
        v = boundary_neighborhood_volume(m, rho)
        assert v == pytest.approx(product_volume_closed_form(m, rho), rel=1e-6)
        assert v == pytest.approx(rho**4 / (16 * np.pi**2), rel=1e-10)
        assert v / boundary_neighborhood_volume(m, rho / 2) == pytest.approx(16, rel=0.05)
    m2 = ProductCuspModel(2)
    one_face = [boundary_neighborhood_volume(m2, r, faces=[0]) for r in (0.5, 0.25, 0.125)]
    slope = np.polyfit(np.log([0.5, 0.25, 0.125]), np.log(one_face), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)


def test_product_factor_curvature_matches_length_law():
    m = ProductCuspModel(1)
    x = 0.2
    # |K| = 3 / (pi l) in the pinned model
    assert abs(float(m.factor_curvature(x))) == pytest.approx(3 / (np.pi * float(m.ell([x, 0.0])[0])), rel=1e-12)
