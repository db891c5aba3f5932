"""Phase-space statistics on the product cusp model and the suspension surrogate.

Everything here works on the product model ``ProductCuspModel`` (factor
``a`` is the half-cusp ``scale (4 dx^2 + x^6 dtau^2)``, ``tau in [0, 2 pi)``).
Unit vectors are written in the orthonormal frame
``e_x = d/dx / (2 sqrt(scale))``, ``e_tau = d/dtau / (sqrt(scale) x^3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate
from scipy.special import gamma as gamma_fn

from .errors import (
    BadParameters,
    FitFailure,
    OutOfChart,
    PreconditionFailed,
    SingularDirection,
)
from .flow import SampledPath, UnitTangentState, clairaut_ode_monitor, integrate_geodesic, integrate_geodesic_ensemble
from .models import SQRT2PI, ProductCuspModel, RevolutionProfile

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Region:
    """Footprint box ``x_lo[a] <= x_a <= x_hi[a]``, full tau circles."""

    x_lo: tuple
    x_hi: tuple

    def check(self, model: ProductCuspModel):
        lo, hi = np.asarray(self.x_lo, float), np.asarray(self.x_hi, float)
        if lo.size != model.m or hi.size != model.m:
            raise BadParameters("region needs one interval per factor")
        if np.any(lo < 0) or np.any(hi <= lo) or np.any(hi > model.xmax):
            raise OutOfChart("region leaves the chart")
        return lo, hi

    def volume(self, model: ProductCuspModel):
        """Liouville volume: footprint area times the unit-sphere area."""
        lo, hi = self.check(model)
        area = np.prod([model.factor_area_exact(a, b) for a, b in zip(lo, hi)])
        return float(area * sphere_area(model.dim))


def sphere_area(n):
    """Area of the unit sphere in R^n."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma_fn(n / 2.0))


@dataclass
class PhaseSample:
    q: np.ndarray  # (N, 2m) chart coordinates
    v: np.ndarray  # (N, 2m) chart velocities, unit norm
    seed: object

    def __len__(self):
        return self.q.shape[0]

    def states(self):
        return [UnitTangentState(a.copy(), b.copy()) for a, b in zip(self.q, self.v)]


def frame_to_chart(model: ProductCuspModel, q, w):
    """Chart velocity from orthonormal-frame components ``w``."""
    v = np.array(w, float, copy=True)
    s = np.sqrt(model.scale)
    v[..., 0::2] = w[..., 0::2] / (2.0 * s)
    v[..., 1::2] = w[..., 1::2] / (s * q[..., 0::2] ** 3)
    return v


def chart_to_frame(model: ProductCuspModel, q, v):
    w = np.array(v, float, copy=True)
    s = np.sqrt(model.scale)
    w[..., 0::2] = v[..., 0::2] * 2.0 * s
    w[..., 1::2] = v[..., 1::2] * s * q[..., 0::2] ** 3
    return w


def _stream(seed, *index):
    """Per-sample generator keyed by ``(seed..., index...)``."""
    key = tuple(int(k) for k in np.atleast_1d(seed)) + tuple(int(k) for k in index)
    return np.random.default_rng(key)


def _footprint_x(u, lo, hi):
    # inverse CDF of the density x^3 on [lo, hi]
    return (lo**4 + u * (hi**4 - lo**4)) ** 0.25


def _draw(model, lo, hi, rng):
    m = model.m
    q = np.empty(2 * m)
    q[0::2] = _footprint_x(rng.uniform(size=m), lo, hi)
    q[1::2] = rng.uniform(0.0, TWO_PI, size=m)
    z = rng.standard_normal(2 * m)
    return q, z / np.linalg.norm(z)


def liouville_sample(model: ProductCuspModel, region: Region, n, seed, *, predicate=None, max_tries=100_000):
    """``n`` Liouville-uniform unit vectors over ``region``.

    Footprints use the inverse CDF of ``x^3`` per factor and uniform tau;
    velocities are uniform on the unit sphere.  ``predicate(q, w)`` (frame
    components) restricts to a subregion by rejection.  Sample ``i`` uses the
    stream ``default_rng((seed, i))`` so results do not depend on ``n``.
    """
    if seed is None:
        raise BadParameters("a seed is required")
    n = int(n)
    if n < 1:
        raise BadParameters("need at least one sample")
    lo, hi = region.check(model)
    qs = np.empty((n, model.dim))
    ws = np.empty((n, model.dim))
    for i in range(n):
        rng = _stream(seed, i)
        for _ in range(max_tries):
            q, w = _draw(model, lo, hi, rng)
            if predicate is None or predicate(q, w):
                break
        else:
            raise PreconditionFailed(f"rejection sampling found no point for sample {i}")
        qs[i], ws[i] = q, w
    return PhaseSample(qs, frame_to_chart(model, qs, ws), seed)


# --------------------------------------------------------------------------
# V_eps sets
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class VepsSpec:
    """``V_eps = {f_alpha <= eps, r_alpha <= eps^2}`` inside a thick window of the other factors.

    The other factors are restricted to the footprint window ``other`` so
    that finite-time flows stay inside the chart.
    """

    eps: float
    model: ProductCuspModel
    alpha: int = 0
    other: tuple = (2.0, 2.5)

    def __post_init__(self):
        if not self.eps > 0:
            raise BadParameters("eps must be positive")
        if self.model.m < 2:
            raise BadParameters("V_eps needs m >= 2: for m = 1 every unit vector has r = 1/sqrt(2 pi)")
        if not 0 <= self.alpha < self.model.m:
            raise BadParameters("factor index out of range")
        if self.x_cap > self.model.xmax or self.other[1] > self.model.xmax:
            raise OutOfChart("eps beyond the chart scale")

    @property
    def x_cap(self):
        """Footprint bound ``x_alpha <= eps / (sqrt(2) pi)``."""
        return self.eps / SQRT2PI

    @property
    def w_cap(self):
        """Frame-speed bound in factor alpha: ``r_alpha = |w_alpha| / sqrt(2 pi)``."""
        return min(1.0, np.sqrt(TWO_PI) * self.eps**2)

    def region(self, x_scale=1.0):
        lo = [self.other[0]] * self.model.m
        hi = [self.other[1]] * self.model.m
        lo[self.alpha] = 0.0
        hi[self.alpha] = min(self.model.xmax, x_scale * self.x_cap)
        return Region(tuple(lo), tuple(hi))

    def contains(self, q, v):
        f = self.model.f(q)[..., self.alpha]
        r = self.model.r(q, v)[..., self.alpha]
        return (f <= self.eps) & (r <= self.eps**2)


def factor_speed_fraction(m, w2_cap):
    """Fraction of the unit sphere in ``R^{2m}`` with factor speed^2 <= w2_cap.

    The squared speed in one 2-plane is Beta(1, m-1) distributed.
    """
    w2_cap = min(max(w2_cap, 0.0), 1.0)
    return 1.0 - (1.0 - w2_cap) ** (m - 1)


def veps_volume_quadrature(spec: VepsSpec):
    """Product-form volume of V_eps."""
    model = spec.model
    region = spec.region()
    lo, hi = region.check(model)
    area = np.prod([model.factor_area(a, b) for a, b in zip(lo, hi)])
    return float(area * sphere_area(model.dim) * factor_speed_fraction(model.m, spec.w_cap**2))


def veps_sample(spec: VepsSpec, n, seed):
    """Exact Liouville-uniform samples of V_eps.

    The footprint is drawn as in ``liouville_sample``; the factor-alpha speed
    squared is drawn from its Beta(1, m-1) law truncated to ``w_cap^2`` and
    the directions inside and across factors are uniform.
    """
    model, m, a = spec.model, spec.model.m, spec.alpha
    lo, hi = spec.region().check(model)
    qs = np.empty((n, model.dim))
    ws = np.empty((n, model.dim))
    p_cap = factor_speed_fraction(m, spec.w_cap**2)
    for i in range(int(n)):
        rng = _stream(seed, i)
        q, _ = _draw(model, lo, hi, rng)
        # truncated Beta(1, m-1) by inverse CDF
        w2 = 1.0 - (1.0 - rng.uniform() * p_cap) ** (1.0 / (m - 1))
        phi = rng.uniform(0.0, TWO_PI)
        rest = rng.standard_normal(model.dim - 2)
        rest *= np.sqrt(1.0 - w2) / np.linalg.norm(rest)
        w = np.empty(model.dim)
        others = [k for k in range(model.dim) if k // 2 != a]
        w[others] = rest
        w[2 * a] = np.sqrt(w2) * np.cos(phi)
        w[2 * a + 1] = np.sqrt(w2) * np.sin(phi)
        qs[i], ws[i] = q, w
    return PhaseSample(qs, frame_to_chart(model, qs, ws), seed)


def veps_volume(spec: VepsSpec, n, seed, *, enlarge=2.0):
    """Monte Carlo volume of V_eps with its standard error.

    Points are drawn Liouville-uniformly from a superset with footprint
    ``x_alpha <= enlarge * x_cap`` and factor speed ``<= enlarge * w_cap``,
    whose volume is known in closed form; the hit fraction times that volume
    estimates vol(V_eps).
    """
    model, m, a = spec.model, spec.model.m, spec.alpha
    sup = spec.region(enlarge)
    lo, hi = sup.check(model)
    w_cap = min(1.0, enlarge * spec.w_cap)
    p_cap = factor_speed_fraction(m, w_cap**2)
    vol_sup = sup.volume(model) * p_cap
    hits = np.empty(int(n), dtype=bool)
    for i in range(int(n)):
        rng = _stream(seed, i)
        q, _ = _draw(model, lo, hi, rng)
        w2 = 1.0 - (1.0 - rng.uniform() * p_cap) ** (1.0 / (m - 1))
        z = np.zeros(model.dim)
        z[2 * a] = np.sqrt(w2)  # direction inside the factor does not enter r or f
        for k in range(m):
            if k != a:
                z[2 * k] = np.sqrt((1.0 - w2) / (m - 1))
        v = frame_to_chart(model, q, z)
        hits[i] = spec.contains(q, v)
    p = hits.mean()
    return float(vol_sup * p), float(vol_sup * np.sqrt(p * (1 - p) / hits.size))


def scaling_exponent(scales, values):
    """Least-squares log-log slope and the per-halving ratios."""
    scales = np.asarray(scales, float)
    values = np.asarray(values, float)
    slope = float(np.polyfit(np.log(scales), np.log(values), 1)[0])
    order = np.argsort(scales)[::-1]
    v = values[order]
    return slope, v[:-1] / v[1:]


# --------------------------------------------------------------------------
# shadowing
# --------------------------------------------------------------------------
B_FLOOR = 0.25


@dataclass
class ShadowResult:
    eps: float
    b_hat: float
    b_hat_refined: float
    b_eff: float
    t_window: float
    fraction: float
    n: int
    n_boundary: int
    max_ratio: float  # max over samples and times of f / eps
    refinement_change: float
    rho4_ratio: float
    rho4_ratio_stated: float


def monitor_pilot(spec: VepsSpec, n_pilot, seed, t_end, dt, *, tol=1e-10):
    """Run ``clairaut_ode_monitor`` on pilot V_eps samples at grid step ``dt``.

    Returns ``(B_hat, rho4 ratio, rho4 ratio with the stated coefficient)``;
    pilots that leave the chart are truncated at their stop time.
    """
    pilots = veps_sample(spec, n_pilot, (int(seed), 7919))
    b, q4, q4s = 0.0, 0.0, 0.0
    for st in pilots.states():
        traj = integrate_geodesic(spec.model, st, t_end, tol, margin_floor=1e-3 * spec.x_cap)
        t_stop = traj.t_end
        k = int(np.floor(t_stop / dt))
        if k < 12:
            continue
        grid = np.arange(k + 1) * dt
        res = clairaut_ode_monitor(spec.model, traj.resample(grid))
        b = max(b, float(res.b_hat[spec.alpha]))
        q4 = max(q4, float(res.rho4_ratio[spec.alpha]))
        q4s = max(q4s, float(res.rho4_ratio_stated[spec.alpha]))
    return b, q4, q4s


def shadowing_window(spec: VepsSpec, n, seed, *, n_pilot=8, tol=1e-9, n_times=200, chunk=50):
    """Fraction of V_eps samples with ``f_alpha(t) <= 2 eps`` on ``[0, 1/(8 B eps)]``.

    ``B`` is the pilot estimate ``B_hat`` floored at 1/4 (``B_eff``); the
    refinement change is ``|B_hat(dt) - B_hat(dt/2)| / B_eff``.  Samples
    whose geodesic reaches the cusp face ``x_alpha -> 0`` before the window
    ends are counted as holding up to that point and reported separately.
    """
    pilot_t = 1.0 / (8.0 * B_FLOOR * spec.eps)
    dt = pilot_t / 400.0
    b1, q4, q4s = monitor_pilot(spec, n_pilot, seed, pilot_t, dt)
    b2, _, _ = monitor_pilot(spec, n_pilot, seed, pilot_t, dt / 2)
    b_eff = max(b1, b2, B_FLOOR)
    t_win = 1.0 / (8.0 * b_eff * spec.eps)
    t_eval = np.linspace(0.0, t_win, n_times + 1)
    sample = veps_sample(spec, n, seed)
    ok = np.empty(len(sample), dtype=bool)
    worst = 0.0
    n_boundary = 0
    floor = 1e-3 * spec.x_cap
    for s in range(0, len(sample), chunk):
        sl = slice(s, s + chunk)
        res = integrate_geodesic_ensemble(spec.model, sample.q[sl], sample.v[sl], t_win, tol, t_eval=t_eval, margin_floor=floor)
        f = spec.model.f(res.y[..., : spec.model.dim])[..., spec.alpha]  # (k, N)
        f_stop = spec.model.f(res.y_stop[:, : spec.model.dim])[:, spec.alpha]
        f_max = np.fmax(np.nanmax(f, axis=0), f_stop)
        ok[sl] = f_max <= 2.0 * spec.eps
        worst = max(worst, float(np.max(f_max / spec.eps)))
        n_boundary += int(res.stopped.sum())
    return ShadowResult(
        spec.eps, b1, b2, b_eff, t_win, float(ok.mean()), len(sample), n_boundary, worst,
        abs(b1 - b2) / b_eff, q4, q4s,
    )


# --------------------------------------------------------------------------
# bump observables
# --------------------------------------------------------------------------
def _phi(t):
    t = np.asarray(t, float)
    return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _phi(t)
    return a / (a + _phi(1.0 - np.asarray(t, float)))


def smooth_step_derivative_sup():
    t = np.linspace(1e-4, 1 - 1e-4, 20001)
    return float(np.max(np.gradient(smooth_step(t), t)))


def window(x, lo, hi, width):
    """Smooth window equal to 1 on ``[lo + width, hi - width]`` and 0 outside ``[lo, hi]``."""
    return smooth_step((x - lo) / width) * smooth_step((hi - x) / width)


def falloff(s):
    """1 for ``s <= 1/2``, 0 for ``s >= 1``."""
    return smooth_step(2.0 * (1.0 - np.asarray(s, float)))


@dataclass
class Observable:
    name: str
    support: dict
    func: object
    sup_norm: float = 1.0
    c1_norm: float = float("nan")
    integral: float = float("nan")
    integral_se: float = 0.0
    extras: dict = field(default_factory=dict)

    def __call__(self, q, v):
        return self.func(q, v)


def _dprofile(fn, t, h=1e-6):
    return (fn(t + h) - fn(t - h)) / (2 * h)


def _c1_norm_fd(func, model, q, v, h=1e-6):
    """Sup over samples of ``|func| + |grad func|`` in frame coordinates.

    Footprint directions are measured in arclength and velocity directions
    in orthonormal components; central differences.
    """
    w = chart_to_frame(model, q, v)
    s = np.sqrt(model.scale)
    grad2 = np.zeros(q.shape[0])
    for k in range(model.dim):
        dq = np.zeros((q.shape[0], model.dim))
        if k % 2 == 0:
            dq[:, k] = h / (2.0 * s)
        else:
            dq[:, k] = h / (s * q[:, k - 1] ** 3)
        d = (func(q + dq, v) - func(q - dq, v)) / (2 * h)
        grad2 += d**2
        dw = np.zeros(model.dim)
        dw[k] = h
        d = (func(q, frame_to_chart(model, q, w + dw)) - func(q, frame_to_chart(model, q, w - dw))) / (2 * h)
        grad2 += d**2
    return float(np.max(np.abs(func(q, v)) + np.sqrt(grad2)))


def _window_c1_grid(model, lo, hi, width, n=401):
    """Exact-profile ``sup|a| + sup|grad a|`` for a two-factor footprint bump on a grid."""
    s = np.sqrt(model.scale)
    xs = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    w = [window(x, a, b, width) for x, a, b in zip(xs, lo, hi)]
    dw = [_dprofile(lambda t, a=a, b=b: window(t, a, b, width), x) / (2.0 * s) for x, a, b in zip(xs, lo, hi)]
    g2 = dw[0][:, None] ** 2 * w[1][None, :] ** 2 + w[0][:, None] ** 2 * dw[1][None, :] ** 2
    return float(1.0 + np.sqrt(g2.max()))


def _bump_b_c1_grid(spec, width, n=161):
    """Exact-profile ``sup|b| + sup|grad b|`` for the two-factor ``b_eps`` on a grid.

    ``b = falloff(f/eps) falloff(r/eps^2) W(x_2)`` with ``|grad f| = sqrt(2) pi / (2 sqrt(scale))``
    in arclength and ``|grad_w r| = 1/sqrt(2 pi)`` in the velocity.
    """
    model, eps = spec.model, spec.eps
    sc = np.sqrt(model.scale)
    t = np.linspace(0.0, 1.0, n)
    lo, hi = spec.other
    x2 = np.linspace(lo, hi, n)
    p1, d1 = falloff(t), _dprofile(falloff, t) * SQRT2PI / (2.0 * sc) / eps
    p2, d2 = p1, _dprofile(falloff, t) / np.sqrt(TWO_PI) / eps**2
    w, dw = window(x2, lo, hi, width), _dprofile(lambda u: window(u, lo, hi, width), x2) / (2.0 * sc)
    g2 = (
        (d1[:, None, None] * p2[None, :, None] * w[None, None, :]) ** 2
        + (p1[:, None, None] * d2[None, :, None] * w[None, None, :]) ** 2
        + (p1[:, None, None] * p2[None, :, None] * dw[None, None, :]) ** 2
    )
    return float(1.0 + np.sqrt(g2.max()))


def bump_a(model: ProductCuspModel, region: Region, width, *, eps0=None, n_check=4000, seed=0):
    """Footprint bump on ``region`` (tensor product of smooth windows in x_a)."""
    lo, hi = region.check(model)
    if np.any(2 * width >= hi - lo):
        raise BadParameters("smoothing width exceeds half the support")
    if eps0 is not None and np.any(model.f(np.column_stack([lo, np.zeros_like(lo)]).ravel()) < eps0):
        raise PreconditionFailed("region U reaches f < eps0")

    def func(q, v):
        x = np.asarray(q, float)[..., 0::2]
        return np.prod(window(x, lo, hi, width), axis=-1)

    per = []
    for a, b in zip(lo, hi):
        val, _ = integrate.quad(lambda x: window(x, a, b, width) * model.density(x), a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        per.append(TWO_PI * val)
    integral = float(np.prod(per) * sphere_area(model.dim))
    obs = Observable("a", {"x_lo": lo.tolist(), "x_hi": hi.tolist()}, func, integral=integral)
    if model.m == 2:
        obs.c1_norm = _window_c1_grid(model, lo, hi, width)
    else:
        smp = liouville_sample(model, region, n_check, seed)
        obs.c1_norm = _c1_norm_fd(func, model, smp.q, smp.v)
    obs.extras["vol_U"] = region.volume(model)
    return obs


def bump_b(spec: VepsSpec, width=0.1, *, n_check=4000, seed=0):
    """``b_eps = falloff(f_a / eps) falloff(r_a / eps^2) * window(other factors)``.

    Support is inside V_eps; the other factors carry a fixed smooth window.
    """
    model, a = spec.model, spec.alpha
    lo_o, hi_o = spec.other
    if 2 * width >= hi_o - lo_o:
        raise BadParameters("smoothing width exceeds half the support")
    eps = spec.eps

    def func(q, v):
        f = model.f(q)[..., a]
        r = model.r(q, v)[..., a]
        x = np.asarray(q, float)[..., 0::2]
        val = falloff(f / eps) * falloff(r / eps**2)
        for k in range(model.m):
            if k != a:
                val = val * window(x[..., k], lo_o, hi_o, width)
        return val

    m = model.m
    fa, _ = integrate.quad(lambda x: falloff(SQRT2PI * x / eps) * model.density(x), 0.0, spec.x_cap, epsabs=0.0, epsrel=1e-12, limit=200)
    fo, _ = integrate.quad(lambda x: window(x, lo_o, hi_o, width) * model.density(x), lo_o, hi_o, epsabs=0.0, epsrel=1e-12, limit=200)
    # sphere part: factor speed squared u ~ Beta(1, m-1), r = sqrt(u / (2 pi))
    u_cap = spec.w_cap**2
    fs, _ = integrate.quad(
        lambda u: falloff(np.sqrt(u / TWO_PI) / eps**2) * (m - 1) * (1 - u) ** (m - 2), 0.0, u_cap, epsabs=0.0, epsrel=1e-12, limit=200
    )
    integral = float((TWO_PI * fa) * (TWO_PI * fo) ** (m - 1) * sphere_area(model.dim) * fs)
    obs = Observable("b_eps", {"eps": eps, "alpha": a, "other": spec.other}, func, integral=integral)
    if m == 2:
        obs.c1_norm = _bump_b_c1_grid(spec, width)
    else:
        smp = veps_sample(spec, n_check, seed)
        obs.c1_norm = _c1_norm_fd(func, model, smp.q, smp.v, h=1e-4 * eps**2)
    return obs


# --------------------------------------------------------------------------
# correlations
# --------------------------------------------------------------------------
@dataclass
class CorrelationSeries:
    times: np.ndarray
    values: np.ndarray
    se: np.ndarray
    n: int
    seed: int
    extras: dict = field(default_factory=dict)


def jackknife(values_fn, data, n_blocks=20):
    """Delete-one-block jackknife of ``values_fn(data_subset)`` (vector valued).

    ``data`` is a tuple of arrays sharing the first axis.
    """
    n = data[0].shape[0]
    n_blocks = min(n_blocks, n)
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    full = np.asarray(values_fn(*data))
    reps = []
    for b in range(n_blocks):
        keep = np.ones(n, dtype=bool)
        keep[edges[b] : edges[b + 1]] = False
        reps.append(values_fn(*(d[keep] for d in data)))
    reps = np.asarray(reps)
    se = np.sqrt((n_blocks - 1) / n_blocks * np.sum((reps - reps.mean(axis=0)) ** 2, axis=0))
    return full, se


def correlation(system, a, b, times, n, seed, *, n_blocks=20):
    """``C_t = mean(a . b o phi_t) - mean(a) mean(b)`` with jackknife errors.

    ``system`` provides ``sample(n, seed) -> state`` and
    ``flow(state, t) -> state`` and ``evaluate(obs, state)``.
    """
    times = np.asarray(times, float)
    st0 = system.sample(n, seed)
    a0 = system.evaluate(a, st0)
    b0 = system.evaluate(b, st0)
    bt = np.empty((n, times.size))
    st = st0
    t_prev = 0.0
    for k, t in enumerate(times):
        st = system.flow(st, t - t_prev)
        t_prev = t
        bt[:, k] = system.evaluate(b, st)

    def est(av, b0v, btv):
        return (av[:, None] * btv).mean(axis=0) - av.mean() * b0v.mean()

    vals, se = jackknife(est, (a0, b0, bt), n_blocks)
    return CorrelationSeries(times, vals, se, int(n), seed)


# --------------------------------------------------------------------------
# suspension surrogate
# --------------------------------------------------------------------------
CAT = np.array([[2, 1], [1, 1]])


@dataclass
class SuspensionState:
    u: np.ndarray  # angular coordinate y / 2 pi on the circle
    w: np.ndarray  # (1 + sin beta) / 2
    s: np.ndarray  # fiber time in [0, roof)


class SuspensionSystem:
    """Suspension over ``cat o shear``, roof ``T(beta) + tau_c``.

    The base is the torus ``(u, w)`` with ``u = y / 2 pi`` and
    ``w = (1 + sin beta) / 2``.  One base step applies the cusp shear
    ``u -> u + dy(beta) / 2 pi`` and then the cat map; both preserve area.
    ``T`` and ``dy`` are tabulated from quadrature on a log grid of
    ``sin beta`` and interpolated.
    """

    def __init__(self, profile: RevolutionProfile, tau_c=1.0, *, n_table=240, s_min=1e-12, seed=0):
        from . import excursions as ex

        if not tau_c > 0:
            raise BadParameters("roof floor must be positive")
        self.profile = profile
        self.tau_c = float(tau_c)
        self.seed = int(seed)
        s = np.geomspace(s_min, 1.0 - 1e-9, n_table)
        beta = np.arcsin(s)
        t = np.array([ex.roof_time_quadrature(profile, b) for b in beta])
        dy = np.array([ex.delta_y_quadrature(profile, b) for b in beta])
        ls = np.log(s)
        self._t = interpolate.CubicSpline(ls, t)
        self._ldy = interpolate.CubicSpline(ls, np.log(dy))
        self._s_min = s_min
        self.roof_max = float(t.max() + tau_c)

    def _ls(self, sabs):
        return np.log(np.clip(sabs, self._s_min, 1.0 - 1e-9))

    def sin_beta(self, w):
        return 2.0 * np.asarray(w, float) - 1.0

    def roof(self, w):
        return self._t(self._ls(np.abs(self.sin_beta(w)))) + self.tau_c

    def shear(self, w):
        sb = self.sin_beta(w)
        return np.sign(sb) * np.exp(self._ldy(self._ls(np.abs(sb)))) / TWO_PI

    def base_map(self, u, w):
        if np.any(np.asarray(w) == 0.5):
            raise SingularDirection("orbit hit beta = 0")
        u1 = u + self.shear(w)
        return np.mod(CAT[0, 0] * u1 + CAT[0, 1] * w, 1.0), np.mod(CAT[1, 0] * u1 + CAT[1, 1] * w, 1.0)

    def jacobian_det(self, u, w, h=1e-7):
        """Finite-difference Jacobian determinant of the base map (lifted, no mod)."""
        def lift(uu, ww):
            u1 = uu + self.shear(ww)
            return np.array([2 * u1 + ww, u1 + ww])

        du = (lift(u + h, w) - lift(u - h, w)) / (2 * h)
        dw = (lift(u, w + h) - lift(u, w - h)) / (2 * h)
        return du[0] * dw[1] - du[1] * dw[0]

    def sample(self, n, seed):
        """Invariant-measure samples: uniform base weighted by the roof, uniform fiber."""
        u = np.empty(n)
        w = np.empty(n)
        s = np.empty(n)
        for i in range(n):
            rng = _stream(seed, i)
            while True:
                uu, ww = rng.uniform(size=2)
                rf = float(self.roof(ww))
                if rng.uniform() * self.roof_max <= rf:
                    break
            u[i], w[i], s[i] = uu, ww, rng.uniform() * rf
        return SuspensionState(u, w, s)

    def flow(self, state: SuspensionState, t):
        return suspension_flow(self, state, t)

    def evaluate(self, obs, state: SuspensionState):
        return obs(state)


def suspension_flow(system: SuspensionSystem, state: SuspensionState, t, max_returns=10_000_000):
    """Flow for time ``t >= 0``: translate in the fiber, apply the base map at the roof."""
    if t < 0:
        raise BadParameters("suspension flow runs forward only")
    u = np.array(state.u, float, copy=True)
    w = np.array(state.w, float, copy=True)
    s = np.array(state.s, float, copy=True) + t
    rf = system.roof(w)
    over = s >= rf
    n = 0
    while np.any(over):
        s[over] -= rf[over]
        u[over], w[over] = system.base_map(u[over], w[over])
        rf[over] = system.roof(w[over])
        over = s >= rf
        n += 1
        if n > max_returns:
            raise BadParameters("too many returns")
    return SuspensionState(u, w, s)


def kac_check(system: SuspensionSystem, n_orbit, seed, n_space=200_000):
    """Orbit average of the roof versus its space average over the base."""
    rng = _stream(seed, 0)
    u, w = rng.uniform(size=2)
    acc = 0.0
    for _ in range(int(n_orbit)):
        acc += float(system.roof(w))
        u, w = system.base_map(np.array([u]), np.array([w]))
        u, w = float(u[0]), float(w[0])
    rng = _stream(seed, 1)
    space = system.roof(rng.uniform(size=n_space))
    return acc / n_orbit, float(space.mean()), float(space.std() / np.sqrt(n_space))


@dataclass
class DecayFit:
    centers: np.ndarray
    slopes: np.ndarray
    ci: np.ndarray  # half widths (2 sigma)
    steepening: bool
    label: str = "indicative only"


def correlation_decay_fit(series: CorrelationSeries, *, per_window=4, snr=2.0):
    """Windowed log-log slopes of ``|C_t|`` against ``t``.

    Only grid points with ``|C_t| > snr * SE`` enter the fit.  Windows are
    consecutive groups of ``per_window`` such points; the CI is two standard
    errors of the least-squares slope.  ``steepening`` is true when the slopes
    decrease along the windows.
    """
    t = np.asarray(series.times, float)
    if t.size < 6 or t[0] <= 0 or np.log10(t[-1] / t[0]) < 3.0 - 1e-9:
        raise FitFailure("need at least three decades of t")
    c = np.abs(np.asarray(series.values, float))
    ok = c > snr * np.asarray(series.se, float)
    t, c = t[ok], c[ok]
    if t.size < 2 * per_window:
        raise FitFailure("too few points above the noise floor")
    centers, slopes, ci = [], [], []
    for i in range(0, t.size - per_window + 1, per_window):
        lt, lc = np.log(t[i : i + per_window]), np.log(c[i : i + per_window])
        coef, cov = np.polyfit(lt, lc, 1, cov=True)
        centers.append(np.exp(lt.mean()))
        slopes.append(coef[0])
        ci.append(2.0 * np.sqrt(max(cov[0, 0], 0.0)))
    slopes = np.array(slopes)
    return DecayFit(np.array(centers), slopes, np.array(ci), bool(np.all(np.diff(slopes) < 0)))


# --------------------------------------------------------------------------
# non-mixing certificate
# --------------------------------------------------------------------------
@dataclass
class CertificateRow:
    eps: float
    t_window: float
    int_a: float
    int_b: float
    int_b_mc: float
    int_b_mc_se: float
    norm_a: float
    norm_b: float
    cross_mc: float  # estimate of int a . b o phi_t at the window end
    c_hat: float
    c_hat_se: float
    disjoint: bool
    max_f_ratio: float  # max over samples/times of f_alpha / eps0 along the flow
    shadow_fraction: float


@dataclass
class Certificate:
    rows: list
    eps0: float
    gamma_max: float
    gamma_bound_holder: float
    k_plus_alpha: float
    gamma_candidates: dict
    verdicts: dict


def default_region_u(model: ProductCuspModel, eps0):
    """Thick region U: every factor footprint has ``f >= eps0`` (with room to spare)."""
    lo = max(1.5 * eps0 / SQRT2PI, 0.5)
    return Region(tuple([lo] * model.m), tuple([lo + 0.5] * model.m))


def nonmixing_certificate(
    model: ProductCuspModel,
    eps_list,
    *,
    region_u=None,
    n=1000,
    seed=0,
    k_plus_alpha=2.0,
    gamma_candidates=(8.0, 10.0, 12.0, 14.0),
    n_times=60,
    tol=1e-9,
    b_eff=None,
):
    """Support disjointness, the correlation identity and the implied exponent bound.

    For every eps the V_eps samples (Liouville-uniform in supp b_eps) are
    flowed for the window ``1/(8 B eps)``; by reversibility the same set
    describes ``phi_{-t}(supp b)``, and disjointness from U follows when
    ``f_alpha <= 2 eps < eps0`` along the way.  The cross term
    ``int a . b o phi_t`` is estimated from the same samples and the
    correlation becomes ``-(int a)(int b)``.

    If a polynomial bound ``|C_t| <= D t^-gamma ||a|| ||b||`` held, then at the
    window end ``R(eps) = (int a int b) / (||a|| ||b||) <= D (8 B eps)^gamma``.
    ``gamma_max`` is the log-log slope of R against eps: any gamma above it
    forces D to blow up as eps -> 0.  With C^{k+alpha} norms the scaling
    ``||b|| ~ eps^{-2(k+alpha)}`` gives the bound ``8 + 2(k+alpha)``.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    eps0 = 4.0 * max(eps_list)
    region_u = default_region_u(model, eps0) if region_u is None else region_u
    a = bump_a(model, region_u, 0.05, eps0=eps0, seed=seed)
    rows = []
    for eps in eps_list:
        spec = VepsSpec(eps, model)
        if not 2 * eps < eps0:
            raise PreconditionFailed("need 2 eps < eps0")
        b = bump_b(spec, seed=seed)
        be = B_FLOOR if b_eff is None else b_eff
        t_win = 1.0 / (8.0 * be * eps)
        smp = veps_sample(spec, n, seed)
        vol_v = veps_volume_quadrature(spec)
        bvals = b(smp.q, smp.v)
        t_eval = np.linspace(0.0, t_win, n_times + 1)
        res = integrate_geodesic_ensemble(model, smp.q, smp.v, t_win, tol, t_eval=t_eval, margin_floor=1e-3 * spec.x_cap)
        qs = res.y[..., : model.dim]
        vs = res.y[..., model.dim :]
        f = model.f(qs)[..., spec.alpha]
        f = np.where(np.isfinite(f), f, 0.0)
        f_max = f.max(axis=0)
        # a o phi_{-t}: reverse the velocity of the endpoint state; a depends only on the footprint
        a_end = np.nan_to_num(a(qs[-1], -vs[-1]))
        a_path = np.nan_to_num(a(qs, vs))
        disjoint = bool(np.all(a_path == 0.0) and np.all(f_max <= 2 * eps) and 2 * eps < eps0)

        def est(bv, av):
            return vol_v * np.array([np.mean(bv), np.mean(bv * av)])

        (ib_mc, cross), (ib_se, cross_se) = jackknife(est, (bvals, a_end))
        c_hat = cross - a.integral * ib_mc
        c_se = np.hypot(cross_se, a.integral * ib_se)
        rows.append(
            CertificateRow(
                eps, t_win, a.integral, b.integral, float(ib_mc), float(ib_se), a.c1_norm, b.c1_norm,
                float(cross), float(c_hat), float(c_se), disjoint, float(f_max.max() / eps0),
                float(np.mean(f_max <= 2 * eps)),
            )
        )
    eps_arr = np.array([r.eps for r in rows])
    ratio = np.array([r.int_a * r.int_b / (r.norm_a * r.norm_b) for r in rows])
    lr, le = np.log(ratio), np.log(eps_arr)
    gamma_global = float(np.polyfit(le, lr, 1)[0])
    # the smallest pair is closest to the eps -> 0 regime that decides the bound
    gamma_max = float((lr[-1] - lr[-2]) / (le[-1] - le[-2]))
    # C^{k+alpha} norms of b scale like eps^{-2(k+alpha)} (one factor eps^-2 per
    # derivative across the r <= eps^2 layer); the constant is the largest
    # measured C^1 prefactor over the sweep
    c_ka = max(r.norm_b * r.eps**2 for r in rows)
    lr_ka = np.log([r.int_a * r.int_b / (r.norm_a * c_ka * r.eps ** (-2.0 * k_plus_alpha)) for r in rows])
    gamma_ka = float((lr_ka[-1] - lr_ka[-2]) / (le[-1] - le[-2]))
    cands = {}
    for g in gamma_candidates:
        d_needed = ratio * (8.0 * B_FLOOR * eps_arr) ** (-g)
        local = float((np.log(d_needed[-1]) - np.log(d_needed[-2])) / (le[-1] - le[-2]))
        cands[str(g)] = {"D_needed": d_needed.tolist(), "growth_exponent": -local, "excluded": bool(-local > 0.25)}
    identity = [abs(abs(r.c_hat) - r.int_a * r.int_b) <= 3.0 * max(r.c_hat_se, 1e-300) for r in rows]
    verdicts = {
        "support_disjoint": all(r.disjoint for r in rows),
        "correlation_identity": all(identity),
        "gamma_le_10": bool(gamma_max <= 10.25),
        "holder_bound": bool(abs(gamma_ka - (8.0 + 2.0 * k_plus_alpha)) <= 0.25),
        "gamma_global_fit": gamma_global,
    }
    return Certificate(rows, eps0, gamma_max, gamma_ka, float(k_plus_alpha), cands, verdicts)
