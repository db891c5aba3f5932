import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusplab.errors import DegeneratePlane, DomainMargin, IncompatibleJ
from cusplab.metric import (
    CallableMetric,
    PlaneSpec,
    antisymmetry_defect,
    christoffel,
    curvature_tensor,
    evaluate_jet,
    kahler_residual,
    lowered_riemann,
    sectional_curvature,
)
from cusplab.models import Euclidean, ProductCuspModel, RevolutionProfile, WPModelM11, hyperbolic_plane

E1, E2 = [1.0, 0.0], [0.0, 1.0]


def _k(metric, p, **kw):
    jet = evaluate_jet(metric, p, **kw)
    return sectional_curvature(curvature_tensor(jet), jet, PlaneSpec(E1, E2))


def test_euclidean_jet_is_flat():
    jet = evaluate_jet(Euclidean(2), [0.3, -1.2])
    assert np.array_equal(jet.g, np.eye(2))
    assert not jet.dg.any() and not jet.d2g.any()
    assert not christoffel(jet).christoffel.any()
    assert _k(Euclidean(2), [0.0, 0.0]) == 0.0


def test_hyperbolic_jet_and_christoffel():
    jet = evaluate_jet(hyperbolic_plane(), [0.3, 2.0])
    assert jet.dg[1, 1, 1] == pytest.approx(-0.25)
    gam = christoffel(jet).christoffel
    assert gam[0, 0, 1] == pytest.approx(-0.5)
    assert gam[1, 0, 0] == pytest.approx(0.5)
    assert gam[1, 1, 1] == pytest.approx(-0.5)
    assert np.array_equal(gam, gam.transpose(0, 2, 1))


@pytest.mark.parametrize("scheme", ["exact", "fd"])
def test_hyperbolic_curvature_sign_convention(scheme):
    assert _k(hyperbolic_plane(), [0.0, 3.0], scheme=scheme) == pytest.approx(-1.0, abs=1e-6)


def test_wp_fd_matches_exact_derivatives():
    wp = CallableMetric(lambda p: np.eye(2) / p[1] ** 3, 2, margin=lambda p: p[1], scale=lambda p: p[1])
    fd = evaluate_jet(wp, [0.0, 1.0], h=1e-3)
    ex = evaluate_jet(hyperbolic_plane().__class__(3.0), [0.0, 1.0])
    assert np.abs(fd.dg - ex.dg).max() <= 1e-8
    assert np.abs(fd.d2g - ex.d2g).max() <= 1e-6


def test_revolution_curvature_value():
    assert _k(RevolutionProfile(4, 1.0, 0.1), [0.5, 0.0]) == pytest.approx(-30.72, rel=1e-4)


def test_wp_curvature_at_two():
    assert _k(WPModelM11(), [0.0, 2.0]) == pytest.approx(-3.0, abs=1e-6)


def test_product_mixed_plane_is_flat():
    model = ProductCuspModel(2)
    p = [0.3, 0.1, 0.7, 2.0]
    jet = evaluate_jet(model, p)
    curv = curvature_tensor(jet)
    k = sectional_curvature(curv, jet, PlaneSpec([1, 0, 0, 0], [0, 0, 1, 0]))
    assert abs(k) <= 1e-6
    k1 = sectional_curvature(curv, jet, PlaneSpec([1, 0, 0, 0], [0, 1, 0, 0]))
    assert k1 == pytest.approx(float(model.factor_curvature(0.3)), rel=1e-10)


def test_domain_margin_raised_near_edge():
    with pytest.raises(DomainMargin):
        evaluate_jet(RevolutionProfile(4, 0.5, 0.1), [0.5 - 1e-7, 0.0], scheme="fd", h=1e-4)


def test_degenerate_plane():
    jet = evaluate_jet(hyperbolic_plane(), [0.0, 1.0])
    with pytest.raises(DegeneratePlane):
        sectional_curvature(curvature_tensor(jet), jet, PlaneSpec([1.0, 1.0], [2.0, 2.0 + 1e-9]))


def test_fd_converges_at_second_order():
    prof = RevolutionProfile(4, 1.0, 0.1)
    p = [0.4, 0.0]
    exact = evaluate_jet(prof, p).dg
    e1 = np.abs(evaluate_jet(prof, p, h=1e-2, scheme="fd", richardson=False).dg - exact).max()
    e2 = np.abs(evaluate_jet(prof, p, h=5e-3, scheme="fd", richardson=False).dg - exact).max()
    assert 3.5 <= e1 / e2 <= 4.5


@pytest.mark.parametrize(
    "metric,p",
    [
        (hyperbolic_plane(), [0.1, 1.5]),
        (WPModelM11(), [0.2, 3.0]),
        (RevolutionProfile(4, 1.0, 0.1), [0.3, 0.0]),
        (ProductCuspModel(2), [0.3, 0.1, 0.7, 2.0]),
    ],
)
def test_riemann_pair_antisymmetry(metric, p):
    jet = evaluate_jet(metric, p)
    curv = curvature_tensor(jet)
    low = lowered_riemann(curv, jet)
    assert antisymmetry_defect(curv, jet) <= 1e-6 * max(np.abs(low).max(), 1e-300)


def test_kahler_residuals():
    wp = WPModelM11()
    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert abs(kahler_residual(wp, j, [1.0, 0.3], [-0.2, 0.7], [0.1, 2.0])) <= 1e-10
    assert abs(kahler_residual(Euclidean(2), j, [1.0, 0.0], [0.0, 1.0], [0, 0], omega=np.array([[0.0, 1.0], [-1.0, 0.0]]))) <= 1e-10
    model = ProductCuspModel(2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = np.array([rng.uniform(0.05, 1.5), 0.0, rng.uniform(0.05, 1.5), 0.0])
        u, v = rng.standard_normal((2, 4))
        assert abs(kahler_residual(model, model.complex_structure, u, v, p)) <= 1e-8
    prof = RevolutionProfile(4, 0.5, 0.1)
    assert abs(kahler_residual(prof, prof.complex_structure, [0.3, 2.0], [-1.0, 5.0], [0.2, 0.0])) <= 1e-10


def test_incompatible_j():
    with pytest.raises(IncompatibleJ):
        kahler_residual(Euclidean(2), np.eye(2), [1, 0], [0, 1], [0, 0])


@settings(max_examples=40, deadline=None)
@given(
    y=st.floats(0.5, 20.0),
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    c=st.floats(-3, 3),
    d=st.floats(-3, 3),
)
def test_sectional_curvature_basis_invariance(y, a, b, c, d):
    det = a * d - b * c
    if abs(det) < 1e-2:
        return
    metric = WPModelM11()
    jet = evaluate_jet(metric, [0.0, y + 1.6])
    curv = curvature_tensor(jet)
    u, v = np.array(E1), np.array(E2)
    k0 = sectional_curvature(curv, jet, PlaneSpec(u, v))
    k1 = sectional_curvature(curv, jet, PlaneSpec(a * u + b * v, c * u + d * v))
    assert k1 == pytest.approx(k0, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(power=st.floats(1.0, 4.0), y=st.floats(0.5, 10.0))
def test_conformal_curvature_oracle(power, y):
    metric = hyperbolic_plane().__class__(power)
    k = _k(metric, [0.0, y], scheme="fd")
    assert k == pytest.approx(-0.5 * power * y ** (power - 2.0), rel=1e-6)
