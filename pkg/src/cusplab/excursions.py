"""Cusp excursions on the surface of revolution and the hypothesis checks built on them.

A unit vector on the parallel ``C(d0) = {x = d0}`` pointing into the cusp is
``v = cos(beta) V + sin(beta) JV`` with ``V`` the inward unit meridian.  The
excursion follows the geodesic until it comes back to ``C(d0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from . import _revkernel as rk
from .errors import (
    BadParameters,
    FitFailure,
    Infeasible,
    PreconditionFailed,
    QuadratureFailure,
    SingularDirection,
    StepFailure,
)
from .flow import Trajectory
from .models import RevolutionProfile

HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class SectionCoords:
    y: float
    beta: float


@dataclass
class ExcursionRecord:
    beta: float
    T: float
    x_min: float
    jT: float
    jpT: float
    Lambda: float
    exit: SectionCoords
    delta_y: float
    int_g: float  # integral of r(1+eps)/x over [0, T] (ODE)
    int_h_mark: float  # integral of (r-1)(1-2eps)/x over [0, t_mark] (ODE)
    int_h: float  # integral of (r-1)(1-2eps)/x over [0, T] (ODE)
    diagnostics: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None


def _check_beta(beta):
    beta = float(beta)
    if beta == 0.0:
        raise SingularDirection("beta = 0 runs straight into the cusp")
    if not abs(beta) < HALF_PI:
        raise BadParameters("need |beta| < pi/2")
    return beta


def entry_state(profile: RevolutionProfile, beta, y0=0.0):
    """Augmented kernel state at the entry point on ``C(d0)``."""
    x = profile.d0
    (e, _, _), (g, _, _) = profile.coefficients(x)
    z = np.zeros(rk.NSTATE)
    z[0] = x
    z[1] = y0
    z[2] = -np.cos(beta) / np.sqrt(e)
    z[3] = np.sin(beta) / np.sqrt(g)
    z[4], z[5] = 0.0, 1.0  # unstable Jacobi field j(0) = 0, j'(0) = 1
    z[6], z[7] = 1.0, 0.0
    return z


def excursion(profile: RevolutionProfile, beta, *, y0=0.0, tol=1e-10, eps=0.05, record=False, t_mark=None, max_steps=2_000_000):
    """Integrate one excursion from ``C(d0)`` into the cusp and back.

    Parameters
    ----------
    beta : float
        Angle to the inward meridian, ``0 < |beta| < pi/2``.
    eps : float
        Slack used in the integrals of ``g`` and ``h`` carried along.
    t_mark : float, optional
        Time at which the running integral of ``h`` is sampled (default
        ``d0/10``).
    record : bool
        Keep every accepted step as a Trajectory (geodesic part only).
    """
    beta = _check_beta(beta)
    z0 = entry_state(profile, beta, y0)
    t_mark = profile.d0 / 10.0 if t_mark is None else float(t_mark)
    cap = 400_000 if record else 0
    rec_t = np.empty(cap)
    rec_z = np.empty((cap, rk.NSTATE))
    out = rk.integrate_rev(
        float(profile.r), float(eps), z0, 0.0, 1, profile.d0, profile.u0, 0.0, t_mark,
        float(tol), float(tol) * 1e-3, 1e-4 * profile.d0, 1e-15, max_steps, rec_t, rec_z,
    )
    status, t, z, n_steps, n_rej, t_turn, x_min, z_mark, drift, c_drift, en_res, n_rec = out
    if status != rk.STATUS_OK:
        raise StepFailure(f"excursion beta={beta:g} failed with status {status}", t=t)
    r = profile.r
    (e, _, _), (g, _, _) = profile.coefficients(z[0])
    beta_exit = np.arctan2(np.sqrt(g) * z[3], np.sqrt(e) * z[2])
    traj = None
    if record:
        traj = Trajectory(rec_t[:n_rec].copy(), rec_z[:n_rec, :4].copy(), 2, tol=tol, n_rejected=n_rej, max_drift=drift)
    c0 = profile.d0**r * np.sin(beta)
    diag = {
        "n_steps": int(n_steps),
        "n_rejected": int(n_rej),
        "max_unit_drift": float(drift),
        "clairaut_drift": float(c_drift),
        "clairaut_drift_rel": float(c_drift / abs(c0)),
        "energy_residual": float(en_res),
        "t_turn": float(t_turn),
        "symmetry_defect": float(abs(2.0 * t_turn - t) / t),
        "clairaut_exit": float(z[0] ** (2 * r) * z[3]),
        "clairaut_entry": float(c0),
    }
    return ExcursionRecord(
        beta=beta,
        T=float(t),
        x_min=float(x_min),
        jT=float(z[4]),
        jpT=float(z[5]),
        Lambda=float(z[4] + z[5]),
        exit=SectionCoords(float(np.mod(z[1], 2 * np.pi)), float(beta_exit)),
        delta_y=float(z[1] - y0),
        int_g=float(z[10]),
        int_h_mark=float(z_mark[11]),
        int_h=float(z[11]),
        diagnostics=diag,
        trajectory=traj,
    )


@lru_cache(maxsize=200_000)
def _lambda_cached(r, u0, d0, beta, tol):
    return excursion(RevolutionProfile(r, u0, d0), beta, tol=tol).Lambda


def expansion_factor(profile: RevolutionProfile, beta, tol=1e-11):
    """``Lambda(beta) = j(T) + j'(T)``; cached per (profile, beta)."""
    return _lambda_cached(profile.r, profile.u0, profile.d0, abs(float(beta)), tol)


# --------------------------------------------------------------------------
# quadrature side
# --------------------------------------------------------------------------
def _turning_data(profile, beta):
    s = abs(np.sin(_check_beta(beta)))
    c = profile.d0**profile.r * s
    x_min = profile.d0 * s ** (1.0 / profile.r)
    w_max = np.log((1.0 + np.sqrt((1.0 - s) * (1.0 + s))) / s)  # arccosh(1/s)
    return s, c, x_min, w_max


def _x_of_w(profile, x_min, w):
    return x_min * np.cosh(w) ** (1.0 / profile.r)


def _sqrt_e(profile, x):
    return np.sqrt(1.0 + (profile.r * x ** (profile.r - 1)) ** 2)


def _quad(fun, a, b, what):
    val, err = integrate.quad(fun, a, b, epsabs=0.0, epsrel=1e-13, limit=400)
    if not np.isfinite(val) or err > 1e-9 * max(abs(val), 1e-300):
        raise QuadratureFailure(f"{what}: estimated error {err:g} for value {val:g}")
    return val


def roof_time_quadrature(profile: RevolutionProfile, beta):
    """Return time ``T(beta)`` by quadrature.

    With ``x^r = c cosh(w)`` the half-time integral
    ``int x^r sqrt(E / (x^{2r} - c^2)) dx`` becomes ``int (x/r) sqrt(E) dw``,
    whose integrand is smooth at the turning point.
    """
    _, _, x_min, w_max = _turning_data(profile, beta)

    def integrand(w):
        x = _x_of_w(profile, x_min, w)
        return x * _sqrt_e(profile, x) / profile.r

    return 2.0 * _quad(integrand, 0.0, w_max, "roof time")


def delta_y_quadrature(profile: RevolutionProfile, beta):
    """Angular advance over one excursion (signed like beta)."""
    s, c, x_min, w_max = _turning_data(profile, beta)

    def integrand(w):
        x = _x_of_w(profile, x_min, w)
        return x * _sqrt_e(profile, x) / (profile.r * c * np.cosh(w) ** 2)

    return np.sign(beta) * 2.0 * _quad(integrand, 0.0, w_max, "angular advance")


def inverse_x_integral(profile: RevolutionProfile, beta, t_upper=None):
    """Return ``int_0^{t} dt / x`` along the excursion, ``t = T`` by default."""
    _, _, x_min, w_max = _turning_data(profile, beta)

    def inv(w):
        return _sqrt_e(profile, _x_of_w(profile, x_min, w)) / profile.r

    def speed(w):
        x = _x_of_w(profile, x_min, w)
        return x * _sqrt_e(profile, x) / profile.r

    half_inv = _quad(inv, 0.0, w_max, "inverse radius")
    if t_upper is None:
        return 2.0 * half_inv
    half_t = _quad(speed, 0.0, w_max, "roof time")
    t_upper = float(t_upper)
    if t_upper <= 0:
        return 0.0
    if t_upper >= 2 * half_t:
        return 2.0 * half_inv
    if t_upper <= half_t:
        # inbound leg: time from entry to parameter w is int_w^W speed
        target = half_t - t_upper
        w0 = optimize.brentq(lambda w: _quad(speed, 0.0, w, "time") - target, 0.0, w_max, xtol=1e-14, rtol=1e-14)
        return _quad(inv, w0, w_max, "inverse radius")
    target = t_upper - half_t
    w1 = optimize.brentq(lambda w: _quad(speed, 0.0, w, "time") - target, 0.0, w_max, xtol=1e-14, rtol=1e-14)
    return half_inv + _quad(inv, 0.0, w1, "inverse radius")


def return_map(profile: RevolutionProfile, s: SectionCoords, *, method="ode", tol=1e-10):
    """First-return map ``F`` on the section, exit recorded against the outward meridian."""
    beta = _check_beta(s.beta)
    if method == "quad":
        dy = delta_y_quadrature(profile, beta)
        return SectionCoords(float(np.mod(s.y + dy, 2 * np.pi)), beta)
    return excursion(profile, beta, y0=s.y, tol=tol).exit


def roof_derivative(profile: RevolutionProfile, beta, h=None, *, tol=1e-11):
    """Central-difference ``T'(beta)`` (one Richardson level) and the identity residual.

    The residual is ``|T'_fd + tan(beta) j(T(beta))| / |T'_fd|`` with ``T`` from
    quadrature and ``j`` from the ODE, so the two sides are computed
    independently.
    """
    beta = _check_beta(beta)
    b = abs(beta)
    h = 1e-3 * b if h is None else float(h)
    if not (0 < b - h and b + h < HALF_PI):
        raise SingularDirection("difference stencil crosses beta = 0 or pi/2")

    def d(hh):
        return (roof_time_quadrature(profile, b + hh) - roof_time_quadrature(profile, b - hh)) / (2 * hh)

    tp = (4.0 * d(0.5 * h) - d(h)) / 3.0
    rec = excursion(profile, b, tol=tol)
    resid = abs(tp + np.tan(b) * rec.jT) / abs(tp)
    return float(np.sign(beta) * tp), float(resid)


# --------------------------------------------------------------------------
# homogeneity strips and growth
# --------------------------------------------------------------------------
@dataclass
class Strip:
    k: int
    lo: float
    hi: float
    Lambda_k: float = float("nan")
    argmin: float = float("nan")
    monotone: bool | None = None
    holder: float = float("nan")


@dataclass
class StripTable:
    nu: float
    k0: int
    strips: list

    def intervals(self):
        return np.array([(s.lo, s.hi) for s in self.strips])


def strip_partition(nu, k0, k_max=None):
    """Strips ``1/(k+1)^nu < |beta| < 1/k^nu`` for ``k0 <= k <= k_max``."""
    if not nu > 0 or int(k0) < 1:
        raise BadParameters("need nu > 0 and k0 >= 1")
    k0 = int(k0)
    k_max = k0 + 99 if k_max is None else int(k_max)
    if k_max < k0:
        raise BadParameters("k_max < k0")
    ks = np.arange(k0, k_max + 1, dtype=float)
    strips = [Strip(int(k), (k + 1.0) ** -nu, k**-nu) for k in ks]
    return StripTable(float(nu), k0, strips)


def strip_minimum(profile, lo, hi, *, n_coarse=5, tol=1e-11, golden_tol=1e-3):
    """Minimum of Lambda over the closed strip ``[lo, hi]``.

    A coarse log grid (endpoints included) brackets the minimum, which is
    refined by golden-section search on ``log beta``.  Returns
    ``(min, argmin, monotone)`` where ``monotone`` reports whether Lambda was
    nonincreasing along the coarse grid.
    """
    grid = np.geomspace(lo, hi, n_coarse)
    vals = np.array([expansion_factor(profile, b, tol) for b in grid])
    i = int(np.argmin(vals))
    monotone = bool(np.all(np.diff(vals) <= 0))
    if i in (0, n_coarse - 1):
        return float(vals[i]), float(grid[i]), monotone
    res = optimize.minimize_scalar(
        lambda u: expansion_factor(profile, np.exp(u), tol),
        bracket=(np.log(grid[i - 1]), np.log(grid[i]), np.log(grid[i + 1])),
        method="golden",
        tol=golden_tol,
    )
    best = min(float(res.fun), float(vals[i]))
    arg = float(np.exp(res.x)) if res.fun <= vals[i] else float(grid[i])
    return best, arg, monotone


@dataclass
class GrowthResult:
    nu: float
    k0: int
    k_max: int
    partial: float
    tail: float
    verdict: bool
    fit_c: float
    fit_s: float
    table: StripTable
    monotone_fraction: float


def one_step_growth(profile: RevolutionProfile, nu, k0, k_max, *, n_coarse=5, fit_from=None, tol=1e-11):
    """Partial sum of ``1/Lambda_k`` plus a power-law tail bound.

    The tail uses ``Lambda_k >= c k^s`` with ``s`` the least-squares log-log
    slope over the computed strips and ``c`` the largest constant making the
    bound hold at every computed strip; it is summed by the integral test.
    """
    r = profile.r
    if not nu > r / (r - 1.0):
        raise BadParameters(f"need nu > r/(r-1) = {r / (r - 1):.6g}")
    table = strip_partition(nu, k0, k_max)
    for s in table.strips:
        s.Lambda_k, s.argmin, s.monotone = strip_minimum(profile, s.lo, s.hi, n_coarse=n_coarse, tol=tol)
    ks = np.array([s.k for s in table.strips], float)
    lam = np.array([s.Lambda_k for s in table.strips])
    partial = float(np.sum(1.0 / lam))
    sel = ks >= (fit_from if fit_from is not None else ks[len(ks) // 2])
    if sel.sum() < 2:
        sel = np.ones_like(ks, dtype=bool)
    if ks.size < 2:
        raise FitFailure("need at least two strips for the tail fit")
    slope = np.polyfit(np.log(ks[sel]), np.log(lam[sel]), 1)[0]
    if not slope > 1.0:
        raise FitFailure(f"fitted growth exponent {slope:.4g} <= 1, tail not summable")
    c = float(np.min(lam / ks**slope))
    kmax = ks[-1]
    tail = float(kmax ** (1.0 - slope) / (c * (slope - 1.0)))
    mono = float(np.mean([bool(s.monotone) for s in table.strips]))
    return GrowthResult(float(nu), int(k0), int(kmax), partial, tail, partial + tail < 1.0, c, float(slope), table, mono)


def find_k0(profile, nu, *, k0_max=10_000, n_strips=16, candidates=None, tol=1e-11):
    """Smallest k0 from a geometric candidate list whose growth verdict is true.

    Returns ``(k0, GrowthResult, history)``; ``k0`` is None if none passes.
    """
    if candidates is None:
        candidates = sorted({int(round(v)) for v in np.geomspace(1, k0_max, 25)})
    history = []
    for k0 in candidates:
        res = one_step_growth(profile, nu, k0, k0 + n_strips - 1, tol=tol)
        history.append(res)
        if res.verdict:
            return k0, res, history
    return None, None, history


# --------------------------------------------------------------------------
# distortion and Hoelder checks
# --------------------------------------------------------------------------
@dataclass
class DistortionResult:
    betas: np.ndarray
    log_derivative: np.ndarray  # Lambda'/Lambda
    theta: float
    sup: float
    slope: float


def log_derivative(profile, beta, rel_h=1e-3, tol=1e-11):
    """``Lambda'(beta)/Lambda(beta)`` by central differences in beta with one Richardson level."""
    b = float(beta)

    def d(hh):
        lp = np.log(expansion_factor(profile, b + hh, tol))
        lm = np.log(expansion_factor(profile, b - hh, tol))
        return (lp - lm) / (2 * hh)

    h = rel_h * b
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


def distortion_profile(profile, betas, theta, *, slope_range=(1e-6, 1e-3), tol=1e-11):
    """Sup of ``beta^theta |Lambda'/Lambda|`` over the grid, plus the log-log slope.

    The slope is the least-squares slope of ``log|Lambda'/Lambda|`` against
    ``log beta`` over grid points inside ``slope_range``.
    """
    betas = np.asarray(betas, float)
    ld = np.array([log_derivative(profile, b, tol=tol) for b in betas])
    sup = float(np.max(betas**theta * np.abs(ld)))
    sel = (betas >= slope_range[0]) & (betas <= slope_range[1])
    if sel.sum() < 3:
        raise FitFailure("too few grid points inside the slope range")
    slope = float(np.polyfit(np.log(betas[sel]), np.log(np.abs(ld[sel])), 1)[0])
    return DistortionResult(betas, ld, float(theta), sup, slope)


def holder_constants(profile, strips: StripTable, alpha, *, n_points=8):
    """Per-strip sup of ``|T(b1) - T(b2)| / |b1 - b2|^alpha`` over sample pairs."""
    nu = strips.nu
    if not 0 < alpha < 1.0 / (nu + 1.0):
        raise BadParameters(f"need 0 < alpha < 1/(nu+1) = {1 / (nu + 1):.6g}")
    out = []
    for s in strips.strips:
        b = np.geomspace(s.lo, s.hi, n_points + 2)[1:-1]
        t = np.array([roof_time_quadrature(profile, x) for x in b])
        i, j = np.triu_indices(b.size, k=1)
        s.holder = float(np.max(np.abs(t[i] - t[j]) / np.abs(b[i] - b[j]) ** alpha))
        out.append(s.holder)
    return np.array(out)


# --------------------------------------------------------------------------
# parameters and envelopes
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Parameters:
    r: float
    nu: float
    theta: float
    eps: float
    alpha: float
    nu_theta: float
    nu_plus_one: float
    feasible: bool


def parameter_selector(r, *, margin=1.0 / 6.0, eps=0.0):
    """Pick ``(nu, theta, eps, alpha)`` with ``nu > r/(r-1)`` and ``nu*theta < nu+1``.

    ``nu = r/(r-1) + margin`` (pulled back to the middle of the admissible
    interval if the margin overshoots it), ``theta = (r+2)(1+eps)/r`` and
    ``alpha`` the midpoint of ``(0, 1/(nu+1))``.  For r <= 3 the admissible
    interval ``(r/(r-1), 1/(theta-1))`` is empty.
    """
    r = float(r)
    if r <= 3.0:
        raise Infeasible(f"r = {r:g}: r + 2 < 2r - 1 fails, no nu with nu*theta < nu + 1")
    theta = (r + 2.0) * (1.0 + eps) / r
    lo = r / (r - 1.0)
    hi = 1.0 / (theta - 1.0)
    if not lo < hi:
        raise Infeasible(f"eps = {eps:g} too large for r = {r:g}")
    nu = lo + margin
    if not nu < hi:
        nu = 0.5 * (lo + hi)
    alpha = 0.5 / (nu + 1.0)
    nt = nu * theta
    return Parameters(r, nu, theta, float(eps), alpha, nt, nu + 1.0, nt < nu + 1.0)


def envelope_precondition(profile, eps):
    r, d0 = profile.r, profile.d0
    e0 = 1.0 + (r * d0 ** (r - 1)) ** 2
    slack = np.sqrt(1.0 - eps) < 1.0 / e0
    k0 = np.sqrt(r * (r - 1.0)) / (d0 * e0)
    g0 = r * (1.0 + eps) / d0
    return bool(slack), bool(k0 < g0), float(k0)


def admissible_d0(profile, eps, shrink=0.5, max_iter=60):
    """Shrink d0 until the envelope precondition holds."""
    p = profile
    for _ in range(max_iter):
        slack, kg, _ = envelope_precondition(p, eps)
        if slack and kg:
            return p
        p = p.with_d0(p.d0 * shrink)
    raise PreconditionFailed("could not find an admissible d0")


@dataclass
class EnvelopeResult:
    betas: np.ndarray
    jT: np.ndarray
    Lambda: np.ndarray
    T: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    closed_form: np.ndarray  # (pi/2)^{2(1+2eps)} beta^{-2(1+2eps)}
    exp_int_g: np.ndarray
    verdict_lower: np.ndarray
    verdict_upper: np.ndarray
    verdict_closed_form: np.ndarray
    applicable: np.ndarray  # T >= d0/2
    slope_j: float
    slope_lambda: float
    slope_bracket: tuple
    k_zero: float
    int_g_ode_defect: float


def envelope_checks(profile: RevolutionProfile, betas, eps=0.05, *, tol=1e-11):
    """Check ``(d0/10) exp(int h) <= j(T) <= exp(int g)/k(0)`` on a beta grid.

    The integrals of ``g`` and ``h`` are evaluated by quadrature; ``j(T)`` and
    ``Lambda`` come from the ODE.
    """
    slack, kg, k_zero = envelope_precondition(profile, eps)
    if not (slack and kg):
        raise PreconditionFailed("d0 too large for the chosen eps")
    r, d0 = profile.r, profile.d0
    t0 = d0 / 10.0
    betas = np.asarray(betas, float)
    rows = []
    defect = 0.0
    for b in betas:
        rec = excursion(profile, b, tol=tol, eps=eps, t_mark=t0)
        inv_total = inverse_x_integral(profile, b)
        inv_t0 = inverse_x_integral(profile, b, t0)
        int_g = r * (1.0 + eps) * inv_total
        int_h = (r - 1.0) * (1.0 - 2.0 * eps) * (inv_total - inv_t0)
        defect = max(defect, abs(int_g - rec.int_g) / int_g)
        rows.append((rec.jT, rec.Lambda, rec.T, int_g, int_h))
    jt, lam, tt, ig, ih = map(np.array, zip(*rows))
    lower = (d0 / 10.0) * np.exp(ih)
    upper = np.exp(ig) / k_zero
    closed = (HALF_PI / betas) ** (2.0 * (1.0 + 2.0 * eps))
    lb = np.log(betas)
    slope_j = float(np.polyfit(lb, np.log(jt), 1)[0])
    slope_l = float(np.polyfit(lb, np.log(lam), 1)[0])
    bracket = (-2.0 * (1.0 + 2.0 * eps), -(r - 1.0) * (1.0 - 3.0 * eps) / r)
    return EnvelopeResult(
        betas, jt, lam, tt, lower, upper, closed, np.exp(ig),
        lower <= jt, jt <= upper, np.exp(ig) <= closed, tt >= d0 / 2.0,
        slope_j, slope_l, bracket, k_zero, float(defect),
    )
