"""Dormand-Prince 5(4) stepping for batches of ODEs sharing one step size.

The Butcher tableau and the quartic dense-output matrix are taken from
``scipy.integrate.RK45``; the stepping loop is our own so that callers can
renormalize states between steps, freeze batch members that hit a boundary and
interpolate inside steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import StepFailure

A = np.array(RK45.A, dtype=float)
B = np.array(RK45.B, dtype=float)
C = np.array(RK45.C, dtype=float)
E = np.array(RK45.E, dtype=float)
P = np.array(RK45.P, dtype=float)
N_STAGES = RK45.n_stages


def dense_eval(y_old, k, h, theta):
    """Evaluate the quartic interpolant of a step at fraction(s) ``theta``.

    ``k`` has shape ``(7, ...state)``.  ``theta`` may be a scalar or a 1-d array;
    for an array the result gains a leading axis.
    """
    theta = np.asarray(theta, dtype=float)
    powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)  # (..., 4)
    coeff = powers @ P.T  # (..., 7)
    if theta.ndim == 0:
        return y_old + h * np.tensordot(coeff, k, axes=(0, 0))
    return y_old[None] + h * np.tensordot(coeff, k, axes=(1, 0))


@dataclass
class StepRecord:
    t: float
    h: float
    y: np.ndarray
    k: np.ndarray


@dataclass
class BatchResult:
    t: np.ndarray  # output times
    y: np.ndarray  # (len(t), N, d); NaN after a member stops
    t_stop: np.ndarray  # per-member stop time (t_end if it ran through)
    y_stop: np.ndarray  # per-member state at stop
    stopped: np.ndarray  # bool, True if the boundary event fired
    n_steps: int
    n_rejected: int
    steps: list = field(default_factory=list)
    max_drift: np.ndarray | None = None


def _root_theta(fun, lo, hi, iters=60):
    """Bisection for the first sign change of ``fun`` on ``[lo, hi]``.

    ``fun(lo) > 0`` and ``fun(hi) <= 0`` are assumed.
    """
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fun(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def integrate_batch(
    rhs,
    t0,
    y0,
    t_end,
    *,
    rtol=1e-10,
    atol=1e-12,
    h0=None,
    h_min=1e-14,
    t_eval=None,
    margin=None,
    post_step=None,
    keep_steps=False,
    max_steps=2_000_000,
):
    """Integrate ``y' = rhs(t, y)`` for a batch ``y`` of shape ``(N, d)``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` returning an array shaped like ``y``.
    margin : callable, optional
        ``margin(y) -> (N,)``; a member stops the first time its margin drops to
        zero or below.  The crossing is located on the dense interpolant.
    post_step : callable, optional
        ``post_step(y) -> (y, drift)`` applied after every accepted step, e.g.
        renormalization.  ``drift`` is a per-member quality metric.
    keep_steps : bool
        Keep the per-step data needed for dense output later.

    Returns
    -------
    BatchResult
    """
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim == 1:
        y = y[None]
    n, d = y.shape
    direction = 1.0
    span = t_end - t0
    if span < 0:
        raise ValueError("integrate_batch runs forward in time only")
    t_eval = np.array([] if t_eval is None else t_eval, dtype=float)
    out = np.full((t_eval.size, n, d), np.nan)
    next_eval = 0
    while next_eval < t_eval.size and t_eval[next_eval] <= t0:
        out[next_eval] = y
        next_eval += 1

    active = np.ones(n, dtype=bool)
    t_stop = np.full(n, float(t_end))
    y_stop = y.copy()
    stopped = np.zeros(n, dtype=bool)
    max_drift = np.zeros(n)
    steps = []

    if margin is not None:
        m0 = margin(y)
        bad = ~(m0 > 0)
        if bad.any():
            active[bad] = False
            stopped[bad] = True
            t_stop[bad] = t0

    t = float(t0)
    if span == 0 or not active.any():
        return BatchResult(t_eval, out, t_stop, y_stop, stopped, 0, 0, steps, max_drift)

    f = rhs(t, y)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0n = np.sqrt(np.mean((y / scale) ** 2))
        d1n = np.sqrt(np.mean((f / scale) ** 2))
        h0 = 1e-6 if d0n < 1e-5 or d1n < 1e-5 else 0.01 * d0n / d1n
    h = min(float(h0), span)
    n_steps = n_rej = 0
    k = np.empty((N_STAGES + 1, n, d))

    while t < t_end and active.any():
        if n_steps >= max_steps:
            raise StepFailure("maximum number of steps exceeded", t=t)
        hmin_here = h_min * max(1.0, abs(t))
        if h < hmin_here:
            raise StepFailure(
                f"step size {h:g} below floor at t={t:g}", t=t, sample_ids=np.flatnonzero(active)
            )
        h = min(h, t_end - t)
        k[0] = f
        for s in range(1, N_STAGES):
            dy = np.tensordot(A[s, :s], k[:s], axes=(0, 0)) * h
            k[s] = rhs(t + C[s] * h, y + dy)
        y_new = y + h * np.tensordot(B, k[:N_STAGES], axes=(0, 0))
        f_new = rhs(t + h, y_new)
        k[N_STAGES] = f_new
        err = h * np.tensordot(E, k, axes=(0, 0))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        per = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        per = np.where(active, per, 0.0)
        err_norm = per.max() if np.all(np.isfinite(per)) else np.inf
        if not err_norm <= 1.0:
            n_rej += 1
            fac = 0.2 if not np.isfinite(err_norm) else max(0.2, 0.9 * err_norm ** -0.2)
            h *= fac
            continue

        # accepted
        t_new = t + h
        kk = k.copy() if (keep_steps or margin is not None or t_eval.size) else k
        if margin is not None:
            m_new = margin(y_new)
            hit = active & ~(m_new > 0)
            for i in np.flatnonzero(hit):
                th = _root_theta(
                    lambda s, i=i: margin(dense_eval(y[i], kk[:, i], h, s)[None])[0], 0.0, 1.0
                )
                t_stop[i] = t + th * h
                y_stop[i] = dense_eval(y[i], kk[:, i], h, th)
                stopped[i] = True
        else:
            hit = np.zeros(n, dtype=bool)
        while next_eval < t_eval.size and t_eval[next_eval] <= t_new:
            te = t_eval[next_eval]
            th = (te - t) / h
            val = dense_eval(y, kk, h, th)
            ok = active & (~hit | (t_stop >= te))
            out[next_eval][ok] = val[ok]
            next_eval += 1
        if keep_steps:
            steps.append(StepRecord(t, h, y.copy(), kk))
        active &= ~hit
        y_frozen = y_new
        if post_step is not None:
            y_frozen, drift = post_step(y_new)
            max_drift = np.where(active, np.maximum(max_drift, drift), max_drift)
        y = np.where(active[:, None], y_frozen, y)
        y_stop[active] = y[active]
        f = rhs(t_new, y) if post_step is not None else np.where(active[:, None], f_new, f)
        t = t_new
        n_steps += 1
        fac = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
        h *= fac

    return BatchResult(t_eval, out, t_stop, y_stop, stopped, n_steps, n_rej, steps, max_drift)
