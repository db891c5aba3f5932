"""Differential-geometry kernel for metrics given in a single coordinate chart.

Index conventions
-----------------
``dg[i, j, k]`` is the partial derivative of ``g[i, j]`` with respect to
coordinate ``k`` and ``d2g[i, j, k, l]`` the second partial in ``k`` and ``l``.
``christoffel[m, i, j]`` is the symbol with upper index ``m``.  The curvature
array ``riemann[l, i, j, k]`` is

    d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^l_js Gamma^s_ik - Gamma^l_ks Gamma^s_ij

so that ``R(e_j, e_k) e_i = riemann[:, i, j, k]`` and the sectional curvature of
the hyperbolic plane comes out as -1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePlane,
    DomainMargin,
    IncompatibleJ,
    NonPositiveDefinite,
    SingularMetric,
)


class ChartMetric:
    """Riemannian metric on an open subset of R^n.

    Subclasses implement :meth:`metric` and :meth:`chart_margin`.  Models that
    know their derivatives in closed form also implement
    :meth:`metric_derivatives`; the kernel then never differences them.
    """

    dim = 2
    name = "chart"

    def metric(self, p):
        raise NotImplementedError

    def metric_derivatives(self, p):
        """Return ``(dg, d2g)`` in closed form, or None if not available."""
        return None

    def chart_margin(self, p):
        """Coordinate distance from ``p`` to the chart boundary (inf if unbounded)."""
        return np.inf

    def chart_scale(self, p):
        """Local length scale used to size finite-difference steps."""
        return 1.0

    def in_chart(self, p):
        return self.chart_margin(p) > 0.0

    def inner(self, p, u, v):
        return float(np.asarray(u) @ self.metric(p) @ np.asarray(v))


class CallableMetric(ChartMetric):
    """Wrap a plain function ``p -> g(p)``; derivatives come from differencing."""

    def __init__(self, func, dim, margin=None, scale=None, name="callable"):
        self._func = func
        self.dim = dim
        self._margin = margin
        self._scale = scale
        self.name = name

    def metric(self, p):
        return np.asarray(self._func(np.asarray(p, dtype=float)), dtype=float)

    def chart_margin(self, p):
        return np.inf if self._margin is None else float(self._margin(np.asarray(p, dtype=float)))

    def chart_scale(self, p):
        return 1.0 if self._scale is None else float(self._scale(np.asarray(p, dtype=float)))


@dataclass(frozen=True)
class MetricJet:
    """Metric coefficients and their first two partial derivatives at a point."""

    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray
    point: np.ndarray
    scheme: str = "exact"
    h: float | None = None

    @property
    def dim(self):
        return self.g.shape[0]


@dataclass(frozen=True)
class CurvatureData:
    christoffel: np.ndarray
    riemann: np.ndarray | None
    point: np.ndarray
    dchristoffel: np.ndarray | None = None


@dataclass(frozen=True)
class PlaneSpec:
    u: np.ndarray
    v: np.ndarray


def _check_spd(g):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefinite(f"metric not positive definite: {g!r}") from exc


def _fd_first(metric, p, h):
    n = p.size
    out = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[:, :, k] = (metric.metric(p + e) - metric.metric(p - e)) / (2.0 * h)
    return out


def _fd_second(metric, p, h, g0):
    n = p.size
    out = np.empty((n, n, n, n))
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = h
        out[:, :, k, k] = (metric.metric(p + ek) - 2.0 * g0 + metric.metric(p - ek)) / h**2
        for l in range(k + 1, n):
            el = np.zeros(n)
            el[l] = h
            mixed = (
                metric.metric(p + ek + el)
                - metric.metric(p + ek - el)
                - metric.metric(p - ek + el)
                + metric.metric(p - ek - el)
            ) / (4.0 * h**2)
            out[:, :, k, l] = mixed
            out[:, :, l, k] = mixed
    return out


def evaluate_jet(metric: ChartMetric, p, h=None, *, scheme="auto", richardson=True) -> MetricJet:
    """Metric jet at ``p``.

    Parameters
    ----------
    metric : ChartMetric
    p : array_like
        Chart coordinates.
    h : float, optional
        Finite-difference step.  Defaults to ``1e-4 * metric.chart_scale(p)``.
    scheme : {"auto", "exact", "fd"}
        ``auto`` uses exact derivatives when the metric provides them.
    richardson : bool
        Apply one level of Richardson extrapolation to the central differences.

    Raises
    ------
    DomainMargin
        If a difference stencil would leave the chart.
    NonPositiveDefinite
        If ``g(p)`` fails Cholesky.
    """
    p = np.asarray(p, dtype=float)
    g = metric.metric(p)
    _check_spd(g)
    if scheme in ("auto", "exact"):
        exact = metric.metric_derivatives(p)
        if exact is not None:
            dg, d2g = exact
            return MetricJet(g, np.asarray(dg, float), np.asarray(d2g, float), p, "exact", None)
        if scheme == "exact":
            raise ValueError(f"{metric.name} has no exact derivatives")
    if h is None:
        h = 1e-4 * metric.chart_scale(p)
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    # the mixed stencil reaches sqrt(2) h along the diagonal; 2h covers it
    if metric.chart_margin(p) < 2.0 * h:
        raise DomainMargin(f"point {p} within 2h={2 * h:g} of the chart boundary")
    dg = _fd_first(metric, p, h)
    d2g = _fd_second(metric, p, h, g)
    if richardson:
        dg = (4.0 * _fd_first(metric, p, h / 2) - dg) / 3.0
        d2g = (4.0 * _fd_second(metric, p, h / 2, g) - d2g) / 3.0
    dg = 0.5 * (dg + dg.transpose(1, 0, 2))
    d2g = 0.5 * (d2g + d2g.transpose(1, 0, 2, 3))
    return MetricJet(g, dg, d2g, p, "fd", h)


def _inverse(g):
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(str(exc)) from exc
    if not np.all(np.isfinite(ginv)):
        raise SingularMetric("inverse metric is not finite")
    return ginv


def christoffel(jet: MetricJet) -> CurvatureData:
    """Christoffel symbols of the second kind from a metric jet."""
    ginv = _inverse(jet.g)
    dg = jet.dg
    # first-kind symbols: S[k, i, j] = g_ki,j + g_kj,i - g_ij,k
    s = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    gam = 0.5 * np.einsum("mk,kij->mij", ginv, s)
    gam = 0.5 * (gam + gam.transpose(0, 2, 1))
    return CurvatureData(gam, None, jet.point)


def christoffel_derivative(jet: MetricJet):
    """Return ``(Gamma, dGamma)`` with ``dGamma[m, i, j, l] = d_l Gamma^m_ij``."""
    ginv = _inverse(jet.g)
    dg, d2g = jet.dg, jet.d2g
    s = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    ds = d2g + d2g.transpose(0, 2, 1, 3) - d2g.transpose(2, 0, 1, 3)
    dginv = -np.einsum("ma,abl,bk->mkl", ginv, dg, ginv)
    gam = 0.5 * np.einsum("mk,kij->mij", ginv, s)
    dgam = 0.5 * (np.einsum("mkl,kij->mijl", dginv, s) + np.einsum("mk,kijl->mijl", ginv, ds))
    return gam, dgam


def curvature_tensor(jet: MetricJet) -> CurvatureData:
    """Riemann tensor ``R^l_ijk`` at the jet's point.

    Derivatives of the Christoffel symbols are taken analytically from the
    jet's second derivatives, which are exact or finite-difference depending on
    ``jet.scheme``.
    """
    gam, dgam = christoffel_derivative(jet)
    riem = (
        dgam.transpose(0, 1, 3, 2)  # d_j Gamma^l_ik -> [l, i, k, j] -> [l, i, j, k]
        - dgam
        + np.einsum("ljs,sik->lijk", gam, gam)
        - np.einsum("lks,sij->lijk", gam, gam)
    )
    return CurvatureData(gam, riem, jet.point, dgam)


def lowered_riemann(curv: CurvatureData, jet: MetricJet):
    return np.einsum("al,lijk->aijk", jet.g, curv.riemann)


def antisymmetry_defect(curv: CurvatureData, jet: MetricJet):
    """Relative violation of ``R_lijk = -R_iljk`` (first-pair antisymmetry)."""
    low = lowered_riemann(curv, jet)
    scale = max(np.abs(low).max(), np.finfo(float).tiny)
    first = np.abs(low + low.transpose(1, 0, 2, 3)).max() / scale
    second = np.abs(low + low.transpose(0, 1, 3, 2)).max() / scale
    return max(first, second)


def sectional_curvature(curv: CurvatureData, jet: MetricJet, plane: PlaneSpec, *, degenerate_tol=1e-12):
    """Sectional curvature ``<R(u,v)v,u> / (|u|^2 |v|^2 - <u,v>^2)``.

    The degeneracy test is scale free: the Gram determinant is divided by
    ``|u|^2 |v|^2`` (the squared sine of the angle between u and v) before it is
    compared with ``degenerate_tol``.
    """
    u = np.asarray(plane.u, dtype=float)
    v = np.asarray(plane.v, dtype=float)
    g = jet.g
    uu, vv, uv = u @ g @ u, v @ g @ v, u @ g @ v
    gram = uu * vv - uv * uv
    if uu <= 0 or vv <= 0 or gram / (uu * vv) < degenerate_tol:
        raise DegeneratePlane("vectors do not span a plane")
    low = lowered_riemann(curv, jet)
    num = np.einsum("aijk,a,i,j,k->", low, u, v, u, v)
    return float(num / gram)


def jacobi_operator_max(curv: CurvatureData, jet: MetricJet, w):
    """Largest value of ``-<R(v, w) w, v>`` over unit vectors v.

    Solved as a generalized symmetric eigenproblem against the metric.
    """
    from scipy.linalg import eigh

    low = lowered_riemann(curv, jet)
    w = np.asarray(w, dtype=float)
    m = np.einsum("aijk,i,k->aj", low, w, w)
    m = -0.5 * (m + m.T)
    return float(eigh(m, jet.g, eigvals_only=True)[-1])


def kahler_residual(metric: ChartMetric, J, u, v, p, omega=None, *, j_tol=1e-10):
    """Return ``omega(u, v) - g(J u, v)`` at ``p``.

    ``J`` and ``omega`` are callables returning n x n matrices at a point (or
    constant matrices).  ``omega`` defaults to ``metric.kahler_form``.
    """
    p = np.asarray(p, dtype=float)
    jm = np.asarray(J(p) if callable(J) else J, dtype=float)
    n = jm.shape[0]
    if np.abs(jm @ jm + np.eye(n)).max() > j_tol * max(1.0, np.abs(jm).max() ** 2):
        raise IncompatibleJ("J^2 + Id exceeds tolerance")
    if omega is None:
        omega = metric.kahler_form
    om = np.asarray(omega(p) if callable(omega) else omega, dtype=float)
    g = metric.metric(p)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(u @ om @ v - (jm @ u) @ g @ v)
