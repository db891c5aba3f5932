"""Bundled model metrics with closed-form derivatives.

Every model here supplies exact first and second derivatives of its metric
coefficients, batched Christoffel symbols for the ensemble integrator and its
Gaussian (or per-factor) curvature in closed form for cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BadParameters, OutOfChart, QuadratureFailure
from .metric import ChartMetric

SQRT2PI = np.sqrt(2.0) * np.pi  # l^{1/2} = SQRT2PI * x in the product model


class Euclidean(ChartMetric):
    name = "euclidean"

    def __init__(self, dim=2):
        self.dim = dim

    def metric(self, p):
        return np.eye(self.dim)

    def metric_derivatives(self, p):
        n = self.dim
        return np.zeros((n, n, n)), np.zeros((n, n, n, n))

    def metric_batch(self, q):
        return np.broadcast_to(np.eye(self.dim), (q.shape[0], self.dim, self.dim))

    def christoffel_batch(self, q):
        n = self.dim
        return np.zeros((q.shape[0], n, n, n))

    def margin_batch(self, q):
        return np.full(q.shape[0], np.inf)

    def complex_structure(self, p):
        if self.dim != 2:
            raise BadParameters("standard J only bundled for the plane")
        return np.array([[0.0, -1.0], [1.0, 0.0]])

    def kahler_form(self, p):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    def gaussian_curvature(self, p):
        return 0.0


class HalfPlaneConformal(ChartMetric):
    """Conformal metric ``|dz|^2 / y^power`` on (part of) the upper half-plane.

    ``power=2`` is the hyperbolic plane.  Optional ``xhalf`` restricts the chart
    to ``|x| <= xhalf`` and ``ylow`` to ``y > ylow``.
    """

    def __init__(self, power=2.0, ylow=0.0, xhalf=None, name=None):
        self.dim = 2
        self.power = float(power)
        self.ylow = float(ylow)
        self.xhalf = xhalf
        self.name = name or f"halfplane(y^-{self.power:g})"

    def _check(self, p):
        x, y = p[0], p[1]
        if not y > self.ylow or (self.xhalf is not None and abs(x) > self.xhalf):
            raise OutOfChart(f"{self.name}: point {p} outside chart")

    def conformal_factor(self, y):
        return y ** (-self.power)

    def metric(self, p):
        p = np.asarray(p, dtype=float)
        self._check(p)
        return self.conformal_factor(p[1]) * np.eye(2)

    def metric_derivatives(self, p):
        p = np.asarray(p, dtype=float)
        self._check(p)
        y, a = p[1], self.power
        dg = np.zeros((2, 2, 2))
        d2g = np.zeros((2, 2, 2, 2))
        dlam = -a * y ** (-a - 1)
        d2lam = a * (a + 1) * y ** (-a - 2)
        for i in range(2):
            dg[i, i, 1] = dlam
            d2g[i, i, 1, 1] = d2lam
        return dg, d2g

    def chart_margin(self, p):
        m = p[1] - self.ylow
        if self.xhalf is not None:
            m = min(m, self.xhalf - abs(p[0]))
        return float(m)

    def chart_scale(self, p):
        return float(p[1])

    def metric_batch(self, q):
        lam = q[:, 1] ** (-self.power)
        return lam[:, None, None] * np.eye(2)

    def christoffel_batch(self, q):
        c = 0.5 * self.power / q[:, 1]
        gam = np.zeros((q.shape[0], 2, 2, 2))
        gam[:, 0, 0, 1] = gam[:, 0, 1, 0] = -c
        gam[:, 1, 0, 0] = c
        gam[:, 1, 1, 1] = -c
        return gam

    def margin_batch(self, q):
        m = q[:, 1] - self.ylow
        if self.xhalf is not None:
            m = np.minimum(m, self.xhalf - np.abs(q[:, 0]))
        return m

    def complex_structure(self, p):
        return np.array([[0.0, -1.0], [1.0, 0.0]])

    def kahler_form(self, p):
        return self.conformal_factor(np.asarray(p, float)[1]) * np.array([[0.0, 1.0], [-1.0, 0.0]])

    def gaussian_curvature(self, p):
        # K = -e^{-2 phi} Laplacian(phi) with phi = -(power/2) log y
        y = np.asarray(p, float)[1]
        return -0.5 * self.power * y ** (self.power - 2.0)


def hyperbolic_plane():
    return HalfPlaneConformal(2.0, name="hyperbolic")


class WPModelM11(HalfPlaneConformal):
    """Model cusp metric ``|dz|^2 / (Im z)^3`` on ``{|x| <= 1/2, y > y0}``."""

    def __init__(self, y0=1.5):
        if not y0 > 1.0:
            raise BadParameters("WP model cusp cutoff needs y0 > 1")
        super().__init__(3.0, ylow=y0, xhalf=0.5, name="wp-m11")
        self.y0 = float(y0)

    def vertical_ray_length(self, y_start=None):
        """Length of the vertical ray from ``Im z = y_start`` up to the cusp."""
        y = self.y0 if y_start is None else float(y_start)
        val, _ = integrate.quad(lambda s: s**-1.5, y, np.inf, epsabs=1e-14, epsrel=1e-12)
        return val


def wp_model_metric(model: WPModelM11, z):
    """Metric coefficients of the WP model at the half-plane point ``z``."""
    z = complex(z)
    return model.metric([z.real, z.imag])


def fenchel_nielsen_model(z):
    """Model length-twist coordinates ``(1/Im z, Re z/Im z)``."""
    z = complex(z)
    if not z.imag > 0:
        raise OutOfChart("Fenchel-Nielsen model needs Im z > 0")
    return 1.0 / z.imag, z.real / z.imag


def fenchel_nielsen_pullback(z):
    """Coefficient of ``dx^dy`` in the pullback of ``(1/2) dl ^ dtau``.

    Computed from the Jacobian of ``(x, y) -> (l, tau)``; the closed form is
    ``1/(2 y^3)``.
    """
    z = complex(z)
    x, y = z.real, z.imag
    dl = np.array([0.0, -1.0 / y**2])
    dtau = np.array([1.0 / y, -x / y**2])
    return 0.5 * (dl[0] * dtau[1] - dl[1] * dtau[0])


@dataclass(frozen=True)
class RevolutionProfile(ChartMetric):
    """Surface of revolution of the profile ``v = u^r`` in the chart ``(x, y)``.

    ``ds^2 = (1 + (r x^{r-1})^2) dx^2 + x^{2r} dy^2`` on ``0 < x <= u0``.  The
    cross-section ``C(d0)`` is the parallel ``x = d0``.
    """

    r: float = 4.0
    u0: float = 0.5
    d0: float = 0.1

    dim = 2
    name = "revolution"

    def __post_init__(self):
        if not self.r > 1.0:
            raise BadParameters("profile exponent must exceed 1")
        if not 0.0 < self.d0 < self.u0:
            raise BadParameters("need 0 < d0 < u0")

    def with_d0(self, d0):
        return RevolutionProfile(self.r, self.u0, d0)

    def _x(self, p):
        x = float(p[0]) if np.ndim(p) else float(p)
        if not (0.0 < x <= self.u0):
            raise OutOfChart(f"x={x} outside (0, {self.u0}]")
        return x

    def coefficients(self, x):
        """Return ``(E, G)`` and their first and second x-derivatives."""
        r = self.r
        a = r * x ** (r - 1)
        e = 1.0 + a * a
        e1 = 2.0 * r * r * (r - 1) * x ** (2 * r - 3)
        e2 = 2.0 * r * r * (r - 1) * (2 * r - 3) * x ** (2 * r - 4)
        g = x ** (2 * r)
        g1 = 2 * r * x ** (2 * r - 1)
        g2 = 2 * r * (2 * r - 1) * x ** (2 * r - 2)
        return (e, e1, e2), (g, g1, g2)

    def metric(self, p):
        (e, _, _), (g, _, _) = self.coefficients(self._x(p))
        return np.array([[e, 0.0], [0.0, g]])

    def metric_derivatives(self, p):
        (_, e1, e2), (_, g1, g2) = self.coefficients(self._x(p))
        dg = np.zeros((2, 2, 2))
        d2g = np.zeros((2, 2, 2, 2))
        dg[0, 0, 0], dg[1, 1, 0] = e1, g1
        d2g[0, 0, 0, 0], d2g[1, 1, 0, 0] = e2, g2
        return dg, d2g

    def chart_margin(self, p):
        return float(min(p[0], self.u0 - p[0]))

    def chart_scale(self, p):
        return float(p[0])

    def metric_batch(self, q):
        x = q[:, 0]
        out = np.zeros((q.shape[0], 2, 2))
        out[:, 0, 0] = 1.0 + (self.r * x ** (self.r - 1)) ** 2
        out[:, 1, 1] = x ** (2 * self.r)
        return out

    def christoffel_batch(self, q):
        r = self.r
        x = q[:, 0]
        e = 1.0 + (r * x ** (r - 1)) ** 2
        e1 = 2.0 * r * r * (r - 1) * x ** (2 * r - 3)
        g1 = 2 * r * x ** (2 * r - 1)
        gam = np.zeros((q.shape[0], 2, 2, 2))
        gam[:, 0, 0, 0] = 0.5 * e1 / e
        gam[:, 0, 1, 1] = -0.5 * g1 / e
        gam[:, 1, 0, 1] = gam[:, 1, 1, 0] = r / x
        return gam

    def margin_batch(self, q):
        return np.minimum(q[:, 0], self.u0 - q[:, 0])

    def gaussian_curvature(self, p):
        x = np.asarray(p, float)[..., 0] if np.ndim(p) else float(p)
        r = self.r
        return -r * (r - 1) / (x**2 * (1.0 + (r * x ** (r - 1)) ** 2) ** 2)

    def meridian_frame(self, x):
        """Inward unit meridian ``V`` and ``JV`` (chart components) at radius x."""
        (e, _, _), (g, _, _) = self.coefficients(x)
        return np.array([-1.0 / np.sqrt(e), 0.0]), np.array([0.0, 1.0 / np.sqrt(g)])

    def complex_structure(self, p):
        x = self._x(p)
        (e, _, _), _ = self.coefficients(x)
        s = np.sqrt(e) / x**self.r
        return np.array([[0.0, 1.0 / s], [-s, 0.0]])

    def kahler_form(self, p):
        x = self._x(p)
        (e, _, _), _ = self.coefficients(x)
        w = np.sqrt(e) * x**self.r
        return np.array([[0.0, -w], [w, 0.0]])


def revolution_metric(profile: RevolutionProfile, x):
    """Diagonal metric coefficients of the revolution chart at radius x."""
    return profile.metric([x, 0.0])


def cusp_distance(profile: RevolutionProfile, x):
    """Arclength along a meridian from the cusp (x = 0) out to radius x."""
    x = float(x)
    if x < 0.0 or x > profile.u0:
        raise OutOfChart(f"x={x} outside [0, {profile.u0}]")
    if x == 0.0:
        return 0.0
    r = profile.r
    val, err = integrate.quad(
        lambda s: np.sqrt(1.0 + (r * s ** (r - 1)) ** 2), 0.0, x, epsabs=1e-15, epsrel=1e-13
    )
    if err > 1e-10 * max(1.0, val):
        raise QuadratureFailure(f"cusp distance quadrature error {err:g}")
    return val


class ProductCuspModel(ChartMetric):
    """Product of ``m`` model cusps ``scale * (4 dx^2 + x^6 dtau^2)``.

    Coordinates are ordered ``(x_1, tau_1, x_2, tau_2, ...)``.  The length
    function of factor a is ``l_a = 2 pi^2 x_a^2``, so ``f_a = l_a^{1/2}`` is
    ``sqrt(2) pi x_a``.
    """

    def __init__(self, m=1, xmax=2.0, scale=np.pi**3):
        if int(m) < 1:
            raise BadParameters("need at least one pinching factor")
        if not xmax > 0 or not scale > 0:
            raise BadParameters("xmax and scale must be positive")
        self.m = int(m)
        self.dim = 2 * self.m
        self.xmax = float(xmax)
        self.scale = float(scale)
        self.name = f"product-cusp(m={self.m})"

    # -- coordinates helpers -------------------------------------------------
    def xs(self, q):
        return np.asarray(q, float)[..., 0::2]

    def _check(self, p):
        x = self.xs(p)
        if np.any(x <= 0.0) or np.any(x > self.xmax):
            raise OutOfChart(f"product chart needs 0 < x <= {self.xmax}, got {x}")

    def metric(self, p):
        p = np.asarray(p, float)
        self._check(p)
        d = np.empty(self.dim)
        d[0::2] = 4.0 * self.scale
        d[1::2] = self.scale * self.xs(p) ** 6
        return np.diag(d)

    def metric_derivatives(self, p):
        p = np.asarray(p, float)
        self._check(p)
        n = self.dim
        dg = np.zeros((n, n, n))
        d2g = np.zeros((n, n, n, n))
        for a, x in enumerate(self.xs(p)):
            i, t = 2 * a, 2 * a + 1
            dg[t, t, i] = 6.0 * self.scale * x**5
            d2g[t, t, i, i] = 30.0 * self.scale * x**4
        return dg, d2g

    def chart_margin(self, p):
        x = self.xs(p)
        return float(min(x.min(), (self.xmax - x).min()))

    def chart_scale(self, p):
        return float(self.xs(p).min())

    def metric_batch(self, q):
        n = self.dim
        out = np.zeros((q.shape[0], n, n))
        idx = np.arange(self.m)
        out[:, 2 * idx, 2 * idx] = 4.0 * self.scale
        out[:, 2 * idx + 1, 2 * idx + 1] = self.scale * q[:, 0::2] ** 6
        return out

    def christoffel_batch(self, q):
        n = self.dim
        gam = np.zeros((q.shape[0], n, n, n))
        x = q[:, 0::2]
        for a in range(self.m):
            i, t = 2 * a, 2 * a + 1
            gam[:, i, t, t] = -0.75 * x[:, a] ** 5
            gam[:, t, i, t] = gam[:, t, t, i] = 3.0 / x[:, a]
        return gam

    def margin_batch(self, q):
        x = q[:, 0::2]
        return np.minimum(x.min(axis=1), (self.xmax - x).min(axis=1))

    # -- geometry ------------------------------------------------------------
    def factor_curvature(self, x):
        """Gaussian curvature of one factor at radius x: ``-3 / (2 scale x^2)``."""
        return -1.5 / (self.scale * np.asarray(x, float) ** 2)

    def complex_structure(self, p):
        p = np.asarray(p, float)
        jm = np.zeros((self.dim, self.dim))
        for a, x in enumerate(self.xs(p)):
            i, t = 2 * a, 2 * a + 1
            # unit d/dx maps to unit d/dtau
            jm[t, i] = 2.0 / x**3
            jm[i, t] = -(x**3) / 2.0
        return jm

    def kahler_form(self, p):
        p = np.asarray(p, float)
        om = np.zeros((self.dim, self.dim))
        for a, x in enumerate(self.xs(p)):
            i, t = 2 * a, 2 * a + 1
            om[i, t] = 2.0 * self.scale * x**3
            om[t, i] = -om[i, t]
        return om

    def ell(self, q):
        """Model length functions ``l_a = 2 pi^2 x_a^2``."""
        return 2.0 * np.pi**2 * self.xs(q) ** 2

    def f(self, q):
        """``f_a = l_a^{1/2}``, shape ``(..., m)``."""
        return SQRT2PI * self.xs(q)

    def r(self, q, v):
        """``r_a(v) = sqrt(<v, lambda_a>^2 + <v, J lambda_a>^2)``, shape ``(..., m)``."""
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        x = q[..., 0::2]
        vx, vt = v[..., 0::2], v[..., 1::2]
        return np.sqrt(2.0 * np.pi**2 * vx**2 + 0.5 * np.pi**2 * x**6 * vt**2)

    def factor_speed2(self, q, v):
        """Squared speed of ``v`` inside each factor, shape ``(..., m)``."""
        x = np.asarray(q, float)[..., 0::2]
        v = np.asarray(v, float)
        return self.scale * (4.0 * v[..., 0::2] ** 2 + x**6 * v[..., 1::2] ** 2)

    def density(self, x):
        """Riemannian area density of one factor in ``dx dtau``."""
        return 2.0 * self.scale * np.asarray(x, float) ** 3

    def factor_area(self, x_lo, x_hi):
        """Area of ``{x_lo <= x <= x_hi}`` in one factor, by quadrature."""
        if x_hi <= x_lo:
            return 0.0
        val, _ = integrate.quad(self.density, x_lo, x_hi, epsabs=0.0, epsrel=1e-13)
        return 2.0 * np.pi * val

    def factor_area_exact(self, x_lo, x_hi):
        return np.pi * self.scale * (x_hi**4 - x_lo**4) if x_hi > x_lo else 0.0


def product_cusp_metric(model: ProductCuspModel, p):
    return model.metric(p)


def lambda_field(model: ProductCuspModel, p, alpha):
    """Return ``(lambda_a, J lambda_a)`` with ``lambda_a = grad l_a^{1/2}``."""
    p = np.asarray(p, float)
    model._check(p)
    if not 0 <= alpha < model.m:
        raise BadParameters(f"factor index {alpha} out of range")
    lam = np.zeros(model.dim)
    lam[2 * alpha] = SQRT2PI / (4.0 * model.scale)
    return lam, model.complex_structure(p) @ lam


def boundary_distance_product(model: ProductCuspModel, p):
    """Normal-ray distance to the nearest face ``{x_a = 0}``.

    Returns ``(distance, comparator)`` where the comparator is
    ``sqrt(2 pi sum_a l_a)``; for ``m = 1`` the two agree exactly.
    """
    p = np.asarray(p, float)
    model._check(p)
    x = model.xs(p)
    dist = float((2.0 * np.sqrt(model.scale) * x).min())
    comp = float(np.sqrt(2.0 * np.pi * model.ell(p).sum()))
    return dist, comp


def boundary_neighborhood_volume(model: ProductCuspModel, rho, *, faces=None):
    """Volume of ``E_rho = {distance to a face <= rho}``.

    ``faces`` selects which factors count as faces (default all), so
    ``faces=[0]`` gives the one-face neighbourhood.
    """
    rho = float(rho)
    if rho < 0:
        raise BadParameters("radius must be nonnegative")
    xr = rho / (2.0 * np.sqrt(model.scale))
    if xr > model.xmax:
        raise OutOfChart("E_rho leaves the chart")
    faces = range(model.m) if faces is None else faces
    total = model.factor_area(0.0, model.xmax)
    near = model.factor_area(0.0, xr)
    outside = 1.0
    for a in range(model.m):
        outside *= (total - near) if a in faces else total
    return total**model.m - outside


def product_volume_closed_form(model: ProductCuspModel, rho):
    """Closed form ``rho^4 / (16 pi^2)``-type constant for m = 1."""
    if model.m != 1:
        raise BadParameters("closed form only for a single factor")
    xr = rho / (2.0 * np.sqrt(model.scale))
    return np.pi * model.scale * xr**4
