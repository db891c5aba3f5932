"""Geodesic flow, perpendicular Jacobi/Riccati propagation and the kappa envelope."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sci_integrate
from scipy.signal import savgol_filter

from .errors import (
    BadParameters,
    BlowupDetected,
    EmptyTrajectory,
    PreconditionFailed,
    StepFailure,
    WrongModel,
)
from .integrate import dense_eval, integrate_batch
from .metric import (
    ChartMetric,
    PlaneSpec,
    curvature_tensor,
    evaluate_jet,
    jacobi_operator_max,
    sectional_curvature,
)
from .models import ProductCuspModel, RevolutionProfile

UNIT_TOL = 1e-9


# --------------------------------------------------------------------------
# states and trajectories
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class UnitTangentState:
    point: np.ndarray
    velocity: np.ndarray

    def as_vector(self):
        return np.concatenate([self.point, self.velocity])

    def reversed(self):
        return UnitTangentState(self.point.copy(), -self.velocity)


@dataclass
class SampledPath:
    """Trajectory values on an explicit time grid."""

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray

    def __len__(self):
        return self.times.size


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (k, 2n), renormalized
    dim: int
    status: str = "ok"  # "ok" or "boundary"
    tol: float = 1e-10
    n_rejected: int = 0
    max_drift: float = 0.0
    steps: list = field(default_factory=list, repr=False)

    @property
    def q(self):
        return self.states[:, : self.dim]

    @property
    def v(self):
        return self.states[:, self.dim :]

    @property
    def t_end(self):
        return float(self.times[-1])

    def state(self, i=-1):
        return UnitTangentState(self.q[i].copy(), self.v[i].copy())

    def sample(self, t):
        """Dense-output state(s) at time(s) ``t`` inside the integrated range."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.steps:
            raise EmptyTrajectory("trajectory kept no dense-output data")
        starts = np.array([s.t for s in self.steps])
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.steps) - 1)
        out = np.empty((t.size, self.states.shape[1]))
        for j, (ti, i) in enumerate(zip(t, idx)):
            s = self.steps[i]
            th = min(max((ti - s.t) / s.h, 0.0), 1.0)
            out[j] = dense_eval(s.y[0], s.k[:, 0], s.h, th)
        return out

    def resample(self, times):
        st = self.sample(times)
        return SampledPath(np.asarray(times, float), st[:, : self.dim], st[:, self.dim :])


def _christoffel_batch(metric: ChartMetric):
    if hasattr(metric, "christoffel_batch"):
        return metric.christoffel_batch

    def gam(q):
        from .metric import christoffel

        return np.stack([christoffel(evaluate_jet(metric, p)).christoffel for p in q])

    return gam


def _metric_batch(metric: ChartMetric):
    if hasattr(metric, "metric_batch"):
        return metric.metric_batch
    return lambda q: np.stack([metric.metric(p) for p in q])


def _margin_batch(metric: ChartMetric):
    if hasattr(metric, "margin_batch"):
        return metric.margin_batch
    return lambda q: np.array([metric.chart_margin(p) for p in q])


def geodesic_rhs(metric: ChartMetric):
    n = metric.dim
    gam = _christoffel_batch(metric)

    def rhs(t, y):
        q, v = y[:, :n], y[:, n:]
        with np.errstate(all="ignore"):
            acc = -np.einsum("bmij,bi,bj->bm", gam(q), v, v)
        return np.concatenate([v, acc], axis=1)

    return rhs


def unit_normalizer(metric: ChartMetric):
    n = metric.dim
    gbatch = _metric_batch(metric)

    def post(y):
        q, v = y[:, :n], y[:, n:]
        with np.errstate(all="ignore"):
            norm2 = np.einsum("bi,bij,bj->b", v, gbatch(q), v)
        drift = np.abs(norm2 - 1.0)
        scale = np.where(norm2 > 0, 1.0 / np.sqrt(np.abs(norm2)), 1.0)
        out = y.copy()
        out[:, n:] *= scale[:, None]
        return out, drift

    return post


def normalize_state(metric: ChartMetric, point, velocity):
    """Return a UnitTangentState with velocity scaled to unit length."""
    point = np.asarray(point, float)
    velocity = np.asarray(velocity, float)
    nrm = np.sqrt(velocity @ metric.metric(point) @ velocity)
    if not nrm > 0:
        raise BadParameters("zero velocity")
    return UnitTangentState(point, velocity / nrm)


def integrate_geodesic(
    metric: ChartMetric, s0: UnitTangentState, t_end, tol=1e-10, *, margin_floor=1e-6, h_min=1e-14
) -> Trajectory:
    """Integrate a unit-speed geodesic for time ``t_end``.

    The velocity is renormalized after every accepted step; the largest
    pre-renormalization deviation ``|g(v,v) - 1|`` is kept in ``max_drift``.
    Integration halts (``status == "boundary"``) when the chart margin drops to
    ``margin_floor``.
    """
    n = metric.dim
    q0 = np.asarray(s0.point, float)
    v0 = np.asarray(s0.velocity, float)
    norm = v0 @ metric.metric(q0) @ v0
    if abs(norm - 1.0) > 1e-6:
        raise BadParameters(f"initial velocity not unit (|v|^2 = {norm})")
    y0 = np.concatenate([q0, v0 / np.sqrt(norm)])[None]
    marg = _margin_batch(metric)
    res = integrate_batch(
        geodesic_rhs(metric),
        0.0,
        y0,
        float(t_end),
        rtol=tol,
        atol=tol * 1e-3,
        h_min=h_min,
        margin=lambda y: marg(y[:, :n]) - margin_floor,
        post_step=unit_normalizer(metric),
        keep_steps=True,
    )
    times = [s.t for s in res.steps] + [float(res.t_stop[0])]
    states = [s.y[0] for s in res.steps] + [res.y_stop[0]]
    # step records hold the pre-renormalization start states only for the first
    # step; afterwards they are the renormalized states carried forward
    return Trajectory(
        np.array(times),
        np.array(states),
        n,
        status="boundary" if res.stopped[0] else "ok",
        tol=tol,
        n_rejected=res.n_rejected,
        max_drift=float(res.max_drift[0]),
        steps=res.steps,
    )


def integrate_geodesic_ensemble(
    metric: ChartMetric, q0, v0, t_end, tol=1e-9, *, t_eval=None, margin_floor=1e-6
):
    """Integrate many geodesics with a shared adaptive step.

    Returns the raw ``BatchResult``; ``result.y`` holds states at ``t_eval``
    (NaN after a member reached the chart margin).
    """
    n = metric.dim
    y0 = np.concatenate([np.atleast_2d(q0), np.atleast_2d(v0)], axis=1)
    marg = _margin_batch(metric)
    post = unit_normalizer(metric)
    y0, _ = post(y0)
    return integrate_batch(
        geodesic_rhs(metric),
        0.0,
        y0,
        float(t_end),
        rtol=tol,
        atol=tol * 1e-3,
        t_eval=t_eval,
        margin=lambda y: marg(y[:, :n]) - margin_floor,
        post_step=post,
    )


# --------------------------------------------------------------------------
# revolution-surface first integrals
# --------------------------------------------------------------------------
def _require_revolution(profile):
    if not isinstance(profile, RevolutionProfile):
        raise WrongModel("operation needs a RevolutionProfile")


def clairaut(profile: RevolutionProfile, s: UnitTangentState):
    """Clairaut constant ``x^r sin(beta)`` from the (V, JV) decomposition.

    The sign follows the section orientation (positive when the geodesic turns
    in the +y direction); its absolute value is ``x^r sin|beta|``.
    """
    _require_revolution(profile)
    x = float(s.point[0])
    _, jv = profile.meridian_frame(x)
    sin_beta = s.velocity @ profile.metric(s.point) @ jv
    return x**profile.r * sin_beta


def first_integrals(profile: RevolutionProfile, traj: Trajectory):
    """Clairaut series ``c(t) = x^{2r} y'`` and the energy-relation residual.

    Returns
    -------
    c : ndarray
    residual : ndarray
        ``(1 + r^2 x^{2(r-1)}) x'^2 + c(0)^2 / x^{2r} - 1``.
    """
    _require_revolution(profile)
    if traj.dim != 2:
        raise WrongModel("trajectory is not on a surface")
    r = profile.r
    x, xd, yd = traj.q[:, 0], traj.v[:, 0], traj.v[:, 1]
    c = x ** (2 * r) * yd
    res = (1.0 + r * r * x ** (2 * (r - 1))) * xd**2 + c[0] ** 2 / x ** (2 * r) - 1.0
    return c, res


# --------------------------------------------------------------------------
# Jacobi and Riccati
# --------------------------------------------------------------------------
@dataclass
class JacobiSolution:
    times: np.ndarray
    j: np.ndarray
    jp: np.ndarray


@dataclass
class RiccatiSolution:
    times: np.ndarray
    u: np.ndarray
    integral: np.ndarray  # cumulative integral of u from the first finite point
    u0: float

    def at(self, t):
        return float(np.interp(t, self.times, self.u))

    def integral_between(self, a, b):
        return float(np.interp(b, self.times, self.integral) - np.interp(a, self.times, self.integral))


def curvature_along(metric: ChartMetric, traj: Trajectory):
    """Return ``t -> K(gamma(t))`` for a surface trajectory."""
    if metric.dim != 2:
        raise WrongModel("scalar Jacobi equation needs a surface")
    if hasattr(metric, "gaussian_curvature"):

        def kfun(t):
            return float(metric.gaussian_curvature(traj.sample(t)[0, :2]))

    else:

        def kfun(t):
            p = traj.sample(t)[0, :2]
            jet = evaluate_jet(metric, p)
            return sectional_curvature(curvature_tensor(jet), jet, PlaneSpec([1.0, 0.0], [0.0, 1.0]))

    return kfun


def jacobi_along(kfun, t0, t1, j0, jp0, *, t_eval=None, tol=1e-11):
    """Solve ``j'' + K(t) j = 0`` on ``[t0, t1]``; ``j0``/``jp0`` may be arrays.

    Several initial conditions are propagated as one batch.
    """
    j0 = np.atleast_1d(np.asarray(j0, float))
    jp0 = np.atleast_1d(np.asarray(jp0, float))
    y0 = np.stack([j0, jp0], axis=1)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 201)

    def rhs(t, y):
        k = kfun(t)
        return np.stack([y[:, 1], -k * y[:, 0]], axis=1)

    shift = t0
    res = integrate_batch(
        lambda s, y: rhs(s + shift, y),
        0.0,
        y0,
        t1 - t0,
        rtol=tol,
        atol=tol * 1e-3,
        t_eval=np.asarray(t_eval) - shift,
    )
    return res.t + shift, res.y[:, :, 0], res.y[:, :, 1]


def propagate_jacobi(metric: ChartMetric, traj: Trajectory, j0, jp0, *, t_eval=None, tol=1e-11):
    """Scalar perpendicular Jacobi field along a surface geodesic."""
    kfun = curvature_along(metric, traj)
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    times, j, jp = jacobi_along(kfun, t0, t1, j0, jp0, t_eval=t_eval, tol=tol)
    return JacobiSolution(times, j[:, 0], jp[:, 0])


def propagate_riccati(k2fun, u0, interval, *, t_eval=None, tol=1e-11, sliver=1e-3, blowup=1e12):
    """Solve ``u' + u^2 = k(t)^2`` forward from ``u(interval[0]) = u0``.

    ``k2fun(t)`` returns ``k(t)^2`` (for a surface, ``-K``).  ``u0 = inf`` is
    handled by solving the linear system ``j'' = k^2 j`` with ``(j, j') = (0, 1)``
    over an initial sliver and switching to ``u = j'/j`` afterwards; the
    cumulative integral then starts at the end of the sliver.
    """
    t0, t1 = map(float, interval)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 401)
    t_eval = np.asarray(t_eval, float)
    start = t0
    u_start = float(u0)
    pre_t, pre_u = [], []
    if np.isinf(u0):
        if u0 < 0:
            raise BadParameters("u0 = -inf is not supported")
        ts = t0 + min(sliver, 0.01 * (t1 - t0))
        inside = t_eval[(t_eval > t0) & (t_eval < ts)]
        grid = np.concatenate([inside, [ts]])
        _, j, jp = jacobi_along(lambda t: -k2fun(t), t0, ts, 0.0, 1.0, t_eval=grid, tol=tol)
        u_grid = jp[:, 0] / j[:, 0]
        pre_t = list(inside)
        pre_u = list(u_grid[:-1])
        start, u_start = ts, float(u_grid[-1])

    def rhs(t, y):
        u = y[:, 0]
        return np.stack([k2fun(t + start) - u * u, u], axis=1)

    grid = t_eval[t_eval >= start]
    try:
        res = integrate_batch(
            rhs,
            0.0,
            np.array([[u_start, 0.0]]),
            t1 - start,
            rtol=tol,
            atol=tol * 1e-3,
            t_eval=grid - start,
            h_min=1e-15,
        )
    except StepFailure as exc:
        raise BlowupDetected(f"Riccati step failure near t={exc.t}") from exc
    u = res.y[:, 0, 0]
    if not np.all(np.isfinite(u)) or np.abs(u).max() > blowup:
        raise BlowupDetected("Riccati solution diverged")
    times = np.concatenate([pre_t, grid])
    uu = np.concatenate([pre_u, u])
    integ = np.concatenate([np.full(len(pre_t), np.nan), res.y[:, 0, 1]])
    return RiccatiSolution(times, uu, integ, float(u0))


def propagator_norm(m):
    """``max(1, ||M||_2)`` for the perpendicular propagator matrix."""
    return max(1.0, float(np.linalg.norm(np.asarray(m, float), 2)))


def jacobi_propagator(kfun, t0, t1, tol=1e-11):
    """2x2 matrix mapping ``(j(t0), j'(t0))`` to ``(j(t1), j'(t1))``."""
    _, j, jp = jacobi_along(kfun, t0, t1, [1.0, 0.0], [0.0, 1.0], t_eval=[t0, t1], tol=tol)
    return np.array([[j[-1, 0], j[-1, 1]], [jp[-1, 0], jp[-1, 1]]])


def flow_derivative_norm(metric: ChartMetric, traj: Trajectory, t0=None, t1=None):
    """Norm of the time-(t1 - t0) flow derivative on the perpendicular bundle."""
    if metric.dim != 2:
        raise WrongModel("flow derivative norm implemented for surfaces")
    t0 = float(traj.times[0]) if t0 is None else t0
    t1 = float(traj.times[-1]) if t1 is None else t1
    return propagator_norm(jacobi_propagator(curvature_along(metric, traj), t0, t1))


def derivative_bound_value(u_zero, u_tau, int_u):
    return 1.0 + 2.0 * (1.0 + u_zero**2) * (1.0 + np.sqrt(1.0 + u_tau**2)) * np.exp(int_u)


def derivative_bound(u: RiccatiSolution, tau):
    """``1 + 2(1+u(0)^2)(1+sqrt(1+u(tau)^2)) exp(int_0^tau u)``.

    ``u`` must be the solution with ``u(-tau) = 0`` on ``[-tau, tau]``.
    """
    if tau > 1.0 + 1e-12 or tau < 0:
        raise BadParameters("derivative bound stated for 0 <= tau <= 1")
    if abs(u.times[0] + tau) > 1e-12 * max(1.0, tau) or abs(u.u[0]) > 1e-14:
        raise PreconditionFailed("Riccati solution must start at -tau with u = 0")
    return derivative_bound_value(u.at(0.0), u.at(tau), u.integral_between(0.0, tau))


# --------------------------------------------------------------------------
# kappa envelope on the product cusp model
# --------------------------------------------------------------------------
@dataclass
class KappaProfile:
    times: np.ndarray
    values: np.ndarray
    C: float
    t_alpha: np.ndarray
    r_alpha: np.ndarray
    f_alpha: np.ndarray
    Q: float = float("nan")
    L: float = float("nan")
    P: float = float("nan")
    rho: float = float("nan")
    curvature_sup: np.ndarray | None = None
    verdicts: dict = field(default_factory=dict)

    def _branches(self, t):
        t = np.atleast_1d(np.asarray(t, float))[:, None]
        ra, fa, ta = self.r_alpha[None], self.f_alpha[None], self.t_alpha[None]
        phi = ra / (ra * np.abs(t - ta) + fa)
        return phi, t, ra, fa, ta

    def base(self, t):
        phi, *_ = self._branches(t)
        return np.maximum(1.0, phi.max(axis=1))

    def value(self, t):
        return self.C * self.base(t)

    def right_derivative(self, t):
        """Right derivative ``D+ kappa`` of the piecewise formula."""
        phi, tt, ra, fa, ta = self._branches(t)
        sgn = np.where(tt >= ta, 1.0, -1.0)
        dphi = -sgn * ra**2 / (ra * np.abs(tt - ta) + fa) ** 2
        top = np.maximum(1.0, phi.max(axis=1))
        active = np.isclose(phi, top[:, None], rtol=1e-12, atol=0.0)
        cand = np.where(active, dphi, -np.inf)
        best = cand.max(axis=1)
        # the constant branch is active (derivative 0) when the max equals 1
        best = np.where(np.isclose(top, 1.0, rtol=1e-12) , np.maximum(best, 0.0), best)
        return self.C * best


def kappa_pieces(model: ProductCuspModel, path: SampledPath):
    """Per-factor ``(t_a, r_a(t_a), f_a(t_a))`` with ``t_a`` the minimizer of f_a."""
    if not isinstance(model, ProductCuspModel):
        raise WrongModel("kappa construction needs the product cusp model")
    if len(path) < 3:
        raise EmptyTrajectory("need at least three samples")
    f = model.f(path.q)
    r = model.r(path.q, path.v)
    idx = np.argmin(f, axis=0)
    cols = np.arange(model.m)
    return path.times[idx], r[idx, cols], f[idx, cols]


def curvature_sup_along(model: ChartMetric, path: SampledPath):
    """``sup_{|v|=1} -<R(v, gamma') gamma', v>`` at every sample."""
    out = np.empty(len(path))
    for i in range(len(path)):
        jet = evaluate_jet(model, path.q[i])
        out[i] = jacobi_operator_max(curvature_tensor(jet), jet, path.v[i])
    return out


def sampled_plane_curvatures(model: ChartMetric, path: SampledPath, n_planes, rng):
    """``-<R(v, gamma') gamma', v>`` for random unit v at every sample, shape (k, n_planes)."""
    from .metric import lowered_riemann

    out = np.empty((len(path), n_planes))
    for i in range(len(path)):
        jet = evaluate_jet(model, path.q[i])
        low = lowered_riemann(curvature_tensor(jet), jet)
        w = path.v[i]
        mat = -np.einsum("aijk,i,k->aj", low, w, w)
        chol = np.linalg.cholesky(jet.g)
        z = rng.standard_normal((n_planes, model.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        v = np.linalg.solve(chol.T, z.T).T  # g-unit vectors
        out[i] = np.einsum("pa,aj,pj->p", v, mat, v)
    return out


def q_from_ratio(min_ratio):
    """Smallest Q >= 0 with ``(1 - Q^2)/Q <= min_ratio``."""
    m = float(min_ratio)
    return 0.5 * (-m + np.sqrt(m * m + 4.0))


def build_kappa(model: ProductCuspModel, path: SampledPath, C=None, *, curvature_sup=None, quad_limit=200):
    """Construct kappa on a segment ``(-delta', delta')`` and its item (a)-(d) data.

    If ``C`` is None the smallest ``C >= 1`` with ``sup curvature <= kappa^2`` at
    every sample is used.  Fitted ``Q``, ``L``, ``P`` are the smallest values
    making items (b)-(d) hold on this segment (floored at 2 as in the
    construction).
    """
    ta, ra, fa = kappa_pieces(model, path)
    prof = KappaProfile(path.times, np.empty(0), 1.0, ta, ra, fa)
    base = prof.base(path.times)
    if curvature_sup is None:
        curvature_sup = curvature_sup_along(model, path)
    need = np.sqrt(np.maximum(curvature_sup, 0.0)) / base
    c_fit = max(1.0, float(need.max()))
    prof.C = c_fit if C is None else float(C)
    prof.values = prof.value(path.times)
    prof.curvature_sup = curvature_sup

    t_lo, t_hi = float(path.times[0]), float(path.times[-1])
    ratio = prof.right_derivative(path.times) / prof.values**2
    prof.Q = max(2.0, q_from_ratio(ratio.min()))
    bd = 2.0 * np.sqrt(model.scale) * model.xs(path.q).min(axis=1)
    prof.rho = float(bd.min())
    pts = [t for t in ta if t_lo < t < t_hi]
    integral, _ = sci_integrate.quad(
        lambda t: float(prof.value(t)[0]), t_lo, t_hi, points=pts or None, limit=quad_limit
    )
    log_rho = abs(np.log(prof.rho))
    prof.L = max(2.0, integral / log_rho) if prof.rho < 1.0 else float("inf")
    t_mid = 0.5 * (t_lo + t_hi)
    ends = max(float(prof.value(t_mid)[0]), float(prof.value(t_hi)[0]))
    prof.P = max(2.0, ends * prof.rho)
    prof.verdicts = {
        "a_curvature": bool(np.all(curvature_sup <= prof.values**2 * (1 + 1e-12))),
        "b_q_control": bool(np.all(ratio >= (1 - prof.Q**2) / prof.Q - 1e-12)),
        "c_integral": bool(prof.rho < 1.0 and integral <= prof.L * log_rho * (1 + 1e-12)),
        "d_endpoints": bool(ends <= prof.P / prof.rho * (1 + 1e-12)),
        "integral": integral,
        "c_fit": c_fit,
    }
    return prof


def riccati_comparison_check(u: RiccatiSolution, kappa: KappaProfile, Q):
    """True iff ``u(t) <= Q kappa(t)`` at every sample of ``u``.

    Raises PreconditionFailed if kappa is not Q-controlled on its sample grid.
    """
    ratio = kappa.right_derivative(kappa.times) / kappa.value(kappa.times) ** 2
    if np.any(ratio < (1 - Q * Q) / Q - 1e-12):
        raise PreconditionFailed("kappa is not Q-controlled")
    ok = np.isfinite(u.u)
    return bool(np.all(u.u[ok] <= Q * kappa.value(u.times[ok]) * (1 + 1e-12)))


@dataclass
class MonitorResult:
    b_hat: np.ndarray  # per factor sup |r'| / f^3
    rho4: np.ndarray  # (k, m) residual series with the model coefficient
    rho4_ratio: np.ndarray  # per factor sup |rho4| / f^4
    rho4_ratio_stated: np.ndarray  # same with the 2 pi / 3 coefficient
    times: np.ndarray


MODEL_RHO4_COEFF = 1.0 / 3.0
STATED_RHO4_COEFF = 2.0 * np.pi / 3.0


def clairaut_ode_monitor(model: ProductCuspModel, path: SampledPath, *, window=9, coefficient=MODEL_RHO4_COEFF):
    """Sup of ``|r_a'| / f_a^3`` and the second-order residual along a path.

    Derivatives use Savitzky-Golay smoothing on the (uniform) sample grid.  In
    the pinned product model the exact identity is
    ``r^2 = f'^2 + (1/3) f f''``; the residual is also reported with the
    ``2 pi / 3`` coefficient for comparison.
    """
    if not isinstance(model, ProductCuspModel):
        raise WrongModel("monitor needs the product cusp model")
    dt = np.diff(path.times)
    if len(path) < window or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise EmptyTrajectory("monitor needs a uniform grid with enough samples")
    h = dt[0]
    f = model.f(path.q)
    r = model.r(path.q, path.v)
    rp = savgol_filter(r, window, 4, deriv=1, delta=h, axis=0, mode="interp")
    fp = savgol_filter(f, window, 4, deriv=1, delta=h, axis=0, mode="interp")
    fpp = savgol_filter(f, window, 4, deriv=2, delta=h, axis=0, mode="interp")
    b_hat = (np.abs(rp) / f**3).max(axis=0)
    rho4 = r**2 - fp**2 - coefficient * f * fpp
    stated = r**2 - fp**2 - STATED_RHO4_COEFF * f * fpp
    return MonitorResult(
        b_hat,
        rho4,
        (np.abs(rho4) / f**4).max(axis=0),
        (np.abs(stated) / f**4).max(axis=0),
        path.times,
    )


# --------------------------------------------------------------------------
# flow-derivative bound on revolution-surface segments
# --------------------------------------------------------------------------
@dataclass
class SegmentCheck:
    start: np.ndarray  # (x, y, x', y') at time -tau
    tau: float
    norm: float
    bound: float
    u_zero: float
    u_tau: float
    int_u: float

    @property
    def holds(self):
        return self.norm <= self.bound


def revolution_segment_check(profile: RevolutionProfile, start, tau, *, tol=1e-11, x_floor=1e-6):
    """Compare ``||D phi_tau||`` with the derivative bound on one segment.

    ``start`` is a unit state ``(x, y, x', y')`` at time ``-tau``.  The Riccati
    solution with ``u(-tau) = 0`` is carried to 0 and then to ``tau``, where
    the perpendicular Jacobi propagator over ``[0, tau]`` is read off.
    Returns None if the geodesic leaves the chart.
    """
    from . import _revkernel as rk

    _require_revolution(profile)
    if not 0.0 < tau <= 1.0:
        raise BadParameters("need 0 < tau <= 1")
    z = np.zeros(rk.NSTATE)
    z[:4] = start
    z[4], z[5], z[6], z[7] = 1.0, 0.0, 0.0, 1.0
    empty_t, empty_z = np.empty(0), np.empty((0, rk.NSTATE))
    r = float(profile.r)
    args = (0, 0.0, profile.u0, x_floor, -1.0, tol, tol * 1e-3, 1e-3 * tau, 1e-15, 2_000_000, empty_t, empty_z)
    out = rk.integrate_rev(r, 0.0, z, tau, *args)
    if out[0] != rk.STATUS_OK:
        return None
    z = out[2].copy()
    u_zero = z[8]
    z[4], z[5], z[6], z[7] = 1.0, 0.0, 0.0, 1.0
    z[9] = 0.0
    out = rk.integrate_rev(r, 0.0, z, tau, *args)
    if out[0] != rk.STATUS_OK:
        return None
    z = out[2]
    m = np.array([[z[4], z[6]], [z[5], z[7]]])
    bound = derivative_bound_value(u_zero, z[8], z[9])
    return SegmentCheck(np.asarray(start, float), float(tau), propagator_norm(m), float(bound), float(u_zero), float(z[8]), float(z[9]))


def random_revolution_segments(profile: RevolutionProfile, n, seed, *, x_range=None, tol=1e-11):
    """``n`` segment checks with random start point, direction and ``tau in (0, 1]``.

    Draws come from per-sample streams keyed by ``(seed, index, attempt)``;
    segments leaving the chart are redrawn.
    """
    lo, hi = x_range if x_range is not None else (0.02, 0.45)
    out = []
    for i in range(int(n)):
        for attempt in range(1000):
            rng = np.random.default_rng((int(seed), i, attempt))
            x = rng.uniform(lo, hi)
            phi = rng.uniform(0.0, 2.0 * np.pi)
            tau = 1.0 - rng.uniform(0.0, 1.0)
            e = 1.0 + (profile.r * x ** (profile.r - 1)) ** 2
            start = np.array([x, 0.0, np.cos(phi) / np.sqrt(e), np.sin(phi) / x**profile.r])
            res = revolution_segment_check(profile, start, tau, tol=tol)
            if res is not None:
                out.append(res)
                break
        else:
            raise StepFailure("could not draw an in-chart segment", sample_ids=[i])
    return out
