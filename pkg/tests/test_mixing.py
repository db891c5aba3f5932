import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cusplab import mixing as mx
from cusplab.errors import BadParameters, FitFailure, OutOfChart, PreconditionFailed
from cusplab.flow import integrate_geodesic
from cusplab.models import ProductCuspModel, RevolutionProfile

MODEL = ProductCuspModel(2, xmax=5.0)
_SUSP = mx.SuspensionSystem(RevolutionProfile(4, 0.5, 0.1), tau_c=1.0, n_table=120)


@pytest.fixture(scope="module")
def suspension():
    return _SUSP


def test_liouville_footprint_density_chi_square():
    region = mx.Region((0.5, 1.0), (1.5, 2.0))
    smp = mx.liouville_sample(MODEL, region, 4000, 3)
    x = smp.q[:, 0]
    edges = np.linspace(0.5, 1.5, 11)
    obs, _ = np.histogram(x, edges)
    p = np.diff(edges**4) / (1.5**4 - 0.5**4)
    chi2 = stats.chisquare(obs, p * x.size)
    assert chi2.pvalue > 1e-3


def test_liouville_velocity_angle_uniform():
    region = mx.Region((1.0, 1.0), (2.0, 2.0))
    smp = mx.liouville_sample(MODEL, region, 3000, 5)
    w = mx.chart_to_frame(MODEL, smp.q, smp.v)
    assert np.abs(np.linalg.norm(w, axis=1) - 1).max() <= 1e-12
    ang = np.mod(np.arctan2(w[:, 1], w[:, 0]), 2 * np.pi) / (2 * np.pi)
    assert stats.kstest(ang, "uniform").pvalue > 1e-3
    assert stats.kstest(w[:, 0] ** 2 + w[:, 1] ** 2, stats.beta(1, 1).cdf).pvalue > 1e-3


def test_sampling_rejects_bad_requests():
    region = mx.Region((1.0, 1.0), (2.0, 2.0))
    with pytest.raises(BadParameters):
        mx.liouville_sample(MODEL, region, 0, 1)
    with pytest.raises(BadParameters):
        mx.liouville_sample(MODEL, region, 5, None)
    with pytest.raises(OutOfChart):
        mx.liouville_sample(MODEL, mx.Region((1.0, 1.0), (6.0, 2.0)), 5, 1)
    with pytest.raises(PreconditionFailed):
        mx.liouville_sample(MODEL, region, 2, 1, predicate=lambda q, w: False, max_tries=10)


def test_sampling_deterministic_and_prefix_stable():
    region = mx.Region((1.0, 1.0), (2.0, 2.0))
    a = mx.liouville_sample(MODEL, region, 20, 9)
    b = mx.liouville_sample(MODEL, region, 10, 9)
    assert np.array_equal(a.q[:10], b.q) and np.array_equal(a.v[:10], b.v)


def test_frame_round_trip():
    rng = np.random.default_rng(0)
    q = np.column_stack([rng.uniform(0.1, 3, 50), rng.uniform(0, 6, 50), rng.uniform(0.1, 3, 50), rng.uniform(0, 6, 50)])
    w = rng.standard_normal((50, 4))
    assert np.allclose(mx.chart_to_frame(MODEL, q, mx.frame_to_chart(MODEL, q, w)), w, rtol=1e-13)


def test_region_volume_matches_quadrature():
    region = mx.Region((0.2, 1.0), (0.9, 2.0))
    area = MODEL.factor_area(0.2, 0.9) * MODEL.factor_area(1.0, 2.0)
    assert region.volume(MODEL) == pytest.approx(area * mx.sphere_area(4), rel=1e-10)
    assert mx.sphere_area(2) == pytest.approx(2 * np.pi) and mx.sphere_area(3) == pytest.approx(4 * np.pi)


def test_veps_requires_two_factors():
    with pytest.raises(BadParameters):
        mx.VepsSpec(0.1, ProductCuspModel(1, xmax=5.0))
    with pytest.raises(BadParameters):
        mx.VepsSpec(0.0, MODEL)


def test_veps_samples_lie_in_veps():
    spec = mx.VepsSpec(0.1, MODEL)
    smp = mx.veps_sample(spec, 500, 2)
    assert spec.contains(smp.q, smp.v).all()
    assert MODEL.f(smp.q)[:, 0].max() <= 0.1


def test_veps_volume_mc_matches_quadrature():
    spec = mx.VepsSpec(0.1, MODEL)
    vol, se = mx.veps_volume(spec, 20000, 4)
    ref = mx.veps_volume_quadrature(spec)
    assert abs(vol - ref) <= 4 * se


def test_veps_volume_shrinks_with_exponent_eight():
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    vols = [mx.veps_volume_quadrature(mx.VepsSpec(e, MODEL)) for e in eps]
    slope, ratios = mx.scaling_exponent(eps, vols)
    assert np.all(np.diff(vols) < 0)
    assert slope == pytest.approx(8.0, abs=0.05)
    assert np.all(ratios > 200)


def test_factor_speed_fraction_beta_law():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((200000, 6))
    u = (z[:, 0] ** 2 + z[:, 1] ** 2) / (z**2).sum(axis=1)
    assert np.mean(u <= 0.2) == pytest.approx(mx.factor_speed_fraction(3, 0.2), abs=5e-3)
    assert mx.factor_speed_fraction(2, 2.0) == 1.0


@settings(max_examples=30, deadline=None)
@given(t=st.floats(-3.0, 4.0))
def test_smooth_step_bounds(t):
    v = float(mx.smooth_step(t))
    assert 0.0 <= v <= 1.0
    if t <= 0.5:
        assert float(mx.falloff(t)) == 1.0
    if t >= 1.0:
        assert float(mx.falloff(t)) == 0.0


def test_smooth_profiles_limits():
    assert mx.smooth_step(0.0) == 0.0 and mx.smooth_step(1.0) == 1.0
    assert mx.falloff(0.5) == 1.0 and mx.falloff(1.0) == 0.0
    assert mx.window(0.5, 0.0, 1.0, 0.1) == 1.0 and mx.window(0.0, 0.0, 1.0, 0.1) == 0.0
    assert 1.9 < mx.smooth_step_derivative_sup() < 2.1


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_bump_values_in_unit_interval(seed):
    spec = mx.VepsSpec(0.1, MODEL)
    b = mx.bump_b(spec)
    smp = mx.veps_sample(spec, 50, seed)
    vals = b(smp.q, smp.v)
    assert np.all((vals >= 0) & (vals <= 1))


def test_bump_b_scaling():
    eps = [0.2, 0.1, 0.05]
    obs = [mx.bump_b(mx.VepsSpec(e, MODEL)) for e in eps]
    scaled = np.array([o.c1_norm * e**2 for o, e in zip(obs, eps)])
    assert scaled.max() / scaled.min() <= 1.5
    lower = np.array([o.integral / e**8 for o, e in zip(obs, eps)])
    assert lower.min() > 0 and lower.max() / lower.min() <= 1.5
    vol = [mx.veps_volume_quadrature(mx.VepsSpec(e, MODEL)) for e in eps]
    assert all(o.integral <= v for o, v in zip(obs, vol))


def test_bump_b_integral_mc():
    spec = mx.VepsSpec(0.1, MODEL)
    b = mx.bump_b(spec)
    smp = mx.veps_sample(spec, 20000, 11)
    vals = b(smp.q, smp.v)
    mc = vals.mean() * mx.veps_volume_quadrature(spec)
    se = vals.std() / np.sqrt(vals.size) * mx.veps_volume_quadrature(spec)
    assert abs(mc - b.integral) <= 4 * se


def test_bump_a_precondition_and_width():
    region = mx.Region((0.5, 0.5), (1.0, 1.0))
    with pytest.raises(BadParameters):
        mx.bump_a(MODEL, region, 0.3)
    with pytest.raises(PreconditionFailed):
        mx.bump_a(MODEL, region, 0.05, eps0=10.0)
    a = mx.bump_a(MODEL, region, 0.05, eps0=1.0)
    assert 0 < a.integral < region.volume(MODEL)
    assert a.c1_norm > 1.0


def test_zero_factor_speed_keeps_footprint():
    q = np.array([0.02, 0.0, 2.2, 0.0])
    v = mx.frame_to_chart(MODEL, q, np.array([0.0, 0.0, 0.6, 0.8]))
    traj = integrate_geodesic(MODEL, mx.PhaseSample(q[None], v[None], 0).states()[0], 2.0, 1e-10)
    assert np.abs(traj.q[:, 0] - 0.02).max() <= 1e-12
    assert np.abs(traj.v[:, :2]).max() <= 1e-12


def test_shadow_window_floor():
    spec = mx.VepsSpec(0.1, MODEL)
    res = mx.shadowing_window(spec, 20, 1, n_pilot=2, n_times=40)
    assert res.b_eff >= mx.B_FLOOR
    assert res.t_window == pytest.approx(1 / (8 * res.b_eff * 0.1))
    assert res.fraction == 1.0 and res.max_ratio <= 2.0


def test_jackknife_mean():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(4000)
    val, se = mx.jackknife(lambda d: np.array([d.mean()]), (x,), 20)
    assert val[0] == pytest.approx(x.mean())
    assert se[0] == pytest.approx(1 / np.sqrt(4000), rel=0.4)


def test_correlation_null_and_variance(suspension):
    a = lambda s: np.cos(2 * np.pi * s.u) + s.w
    one = lambda s: np.ones_like(s.u)
    c = mx.correlation(suspension, a, one, [0.5, 2.0], 400, 3)
    assert np.abs(c.values).max() <= 1e-12
    c = mx.correlation(suspension, a, a, [0.0, 1.0], 400, 3)
    assert c.values[0] >= 0


def test_suspension_area_preserving(suspension):
    rng = np.random.default_rng(2)
    u, w = rng.uniform(size=50), rng.uniform(0.01, 0.99, 50)
    w = w[np.abs(w - 0.5) > 1e-3]
    assert np.abs(suspension.jacobian_det(u[: w.size], w) - 1.0).max() <= 1e-5
    assert np.all(suspension.roof(w) >= 1.0)


@settings(max_examples=20, deadline=None)
@given(t1=st.floats(0.0, 3.0), t2=st.floats(0.0, 3.0), seed=st.integers(0, 1000))
def test_suspension_flow_additive(t1, t2, seed):
    sysm = _SUSP
    s0 = sysm.sample(8, seed)
    a = sysm.flow(sysm.flow(s0, t1), t2)
    b = sysm.flow(s0, t1 + t2)
    assert np.abs(np.angle(np.exp(2j * np.pi * (a.u - b.u)))).max() <= 1e-8
    assert np.abs(a.w - b.w).max() <= 1e-8 and np.abs(a.s - b.s).max() <= 1e-8


def test_suspension_rejects_backward(suspension):
    with pytest.raises(BadParameters):
        suspension.flow(suspension.sample(2, 0), -1.0)


def test_kac_orbit_average(suspension):
    orbit, space, se = mx.kac_check(suspension, 20000, 1, 50000)
    assert abs(orbit - space) <= 0.01 * space


def test_decay_fit_synthetic():
    t = np.geomspace(0.1, 100.0, 24)
    exp_series = mx.CorrelationSeries(t, np.exp(-t), np.zeros_like(t), 1, 0)
    fit = mx.correlation_decay_fit(exp_series)
    assert fit.steepening
    pw = mx.CorrelationSeries(t, 3 * t**-2.0, np.zeros_like(t), 1, 0)
    fit = mx.correlation_decay_fit(pw)
    assert np.allclose(fit.slopes, -2.0, atol=1e-10)
    with pytest.raises(FitFailure):
        mx.correlation_decay_fit(mx.CorrelationSeries(t[:10], t[:10], np.zeros(10), 1, 0))
    with pytest.raises(FitFailure):
        mx.correlation_decay_fit(mx.CorrelationSeries(t, np.ones_like(t), np.ones_like(t), 1, 0))
