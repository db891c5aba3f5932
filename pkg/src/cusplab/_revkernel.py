"""Compiled Dormand-Prince kernel for geodesics on the revolution surface.

State layout (12 components)::

    0 x   1 y   2 x'   3 y'
    4 j1  5 j1'  6 j2  7 j2'     two perpendicular Jacobi fields, j'' = -K j
    8 u   9 int u               Riccati u' = -K - u^2 and its running integral
    10 int g  11 int h          integrals of r(1+eps)/x and (r-1)(1-2eps)/x

Only the geodesic part enters the step-size control; the auxiliary
components are checked too but with the same relative tolerance.
"""
import numpy as np
from numba import njit

from .integrate import A, B, C, E, P

NSTATE = 12
STATUS_OK = 0
STATUS_STEP_FAILURE = 1
STATUS_BOUNDARY = 2
STATUS_MAX_STEPS = 3

_A = np.ascontiguousarray(A)
_B = np.ascontiguousarray(B)
_C = np.ascontiguousarray(C)
_E = np.ascontiguousarray(E)
_P = np.ascontiguousarray(P)


@njit(cache=True)
def _rhs(r, eps, z, dz):
    x = z[0]
    xd = z[2]
    yd = z[3]
    a = r * x ** (r - 1.0)
    e = 1.0 + a * a
    e1 = 2.0 * r * r * (r - 1.0) * x ** (2.0 * r - 3.0)
    k = -r * (r - 1.0) / (x * x * e * e)
    dz[0] = xd
    dz[1] = yd
    dz[2] = (-e1 * xd * xd + 2.0 * r * x ** (2.0 * r - 1.0) * yd * yd) / (2.0 * e)
    dz[3] = -(2.0 * r / x) * xd * yd
    dz[4] = z[5]
    dz[5] = -k * z[4]
    dz[6] = z[7]
    dz[7] = -k * z[6]
    dz[8] = -k - z[8] * z[8]
    dz[9] = z[8]
    dz[10] = r * (1.0 + eps) / x
    dz[11] = (r - 1.0) * (1.0 - 2.0 * eps) / x


@njit(cache=True)
def _dense(y_old, k, h, theta, out):
    t1 = theta
    t2 = t1 * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(NSTATE):
        acc = 0.0
        for s in range(7):
            acc += k[s, i] * (_P[s, 0] * t1 + _P[s, 1] * t2 + _P[s, 2] * t3 + _P[s, 3] * t4)
        out[i] = y_old[i] + h * acc


@njit(cache=True)
def _bisect(y_old, k, h, comp, target, lo, hi, tmp):
    # first theta in [lo, hi] where component comp crosses target upward
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        _dense(y_old, k, h, mid, tmp)
        if tmp[comp] < target:
            lo = mid
        else:
            hi = mid
    return hi


@njit(cache=True)
def integrate_rev(
    r, eps, z0, t_end, mode, d0, u0, x_floor, t_mark, rtol, atol, h0, hmin, max_steps, rec_t, rec_z
):
    """Integrate the augmented geodesic system.

    mode 0 runs to ``t_end`` (stopping early if x leaves ``(x_floor, u0]``);
    mode 1 stops when x returns to ``d0`` after its turning point.

    Returns a tuple
    (status, t, z, n_steps, n_rej, t_turn, x_min, z_mark, max_drift,
     max_c_drift, max_energy_residual, n_rec)
    """
    z = z0.copy()
    y_new = np.empty(NSTATE)
    tmp = np.empty(NSTATE)
    z_mark = np.full(NSTATE, np.nan)
    k = np.empty((7, NSTATE))
    t = 0.0
    h = h0
    n_steps = 0
    n_rej = 0
    turned = False
    t_turn = np.nan
    x_min = np.nan
    max_drift = 0.0
    max_c = 0.0
    max_en = 0.0
    x0 = z[0]
    c0 = x0 ** (2.0 * r) * z[3]
    n_rec = 0
    cap = rec_t.shape[0]
    if cap > 0:
        rec_t[0] = 0.0
        rec_z[0, :] = z
        n_rec = 1
    status = STATUS_OK
    _rhs(r, eps, z, k[0])
    while True:
        if mode == 0 and t >= t_end:
            break
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < hmin * max(1.0, abs(t)):
            status = STATUS_STEP_FAILURE
            break
        if mode == 0 and t + h > t_end:
            h = t_end - t
        for s in range(1, 6):
            for i in range(NSTATE):
                acc = 0.0
                for q in range(s):
                    acc += _A[s, q] * k[q, i]
                tmp[i] = z[i] + h * acc
            _rhs(r, eps, tmp, k[s])
        for i in range(NSTATE):
            acc = 0.0
            for q in range(6):
                acc += _B[q] * k[q, i]
            y_new[i] = z[i] + h * acc
        _rhs(r, eps, y_new, k[6])
        err = 0.0
        for i in range(NSTATE):
            acc = 0.0
            for q in range(7):
                acc += _E[q] * k[q, i]
            sc = atol + rtol * max(abs(z[i]), abs(y_new[i]))
            v = h * acc / sc
            err += v * v
        err = np.sqrt(err / NSTATE)
        if not (err <= 1.0) or not (y_new[0] > 0.0):
            n_rej += 1
            if err != err or not (y_new[0] > 0.0):
                h *= 0.2
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
            continue

        # accepted step from t to t + h
        theta_lo = 0.0
        done = False
        if not turned and z[2] < 0.0 and y_new[2] >= 0.0:
            th = _bisect(z, k, h, 2, 0.0, 0.0, 1.0, tmp)
            _dense(z, k, h, th, tmp)
            t_turn = t + th * h
            x_min = tmp[0]
            turned = True
            theta_lo = th
        if t < t_mark <= t + h:
            _dense(z, k, h, (t_mark - t) / h, z_mark)
        if mode == 1 and turned and y_new[0] >= d0:
            th = _bisect(z, k, h, 0, d0, theta_lo, 1.0, tmp)
            _dense(z, k, h, th, y_new)
            h = th * h
            done = True
        if mode == 0 and (y_new[0] <= x_floor or y_new[0] > u0):
            status = STATUS_BOUNDARY
            done = True

        # diagnostics before renormalization
        x = y_new[0]
        a = r * x ** (r - 1.0)
        e = 1.0 + a * a
        g22 = x ** (2.0 * r)
        norm2 = e * y_new[2] * y_new[2] + g22 * y_new[3] * y_new[3]
        drift = abs(norm2 - 1.0)
        if drift > max_drift:
            max_drift = drift
        c = g22 * y_new[3]
        if abs(c - c0) > max_c:
            max_c = abs(c - c0)
        en = abs(e * y_new[2] * y_new[2] + c0 * c0 / g22 - 1.0)
        if en > max_en:
            max_en = en
        scale = 1.0 / np.sqrt(norm2)
        y_new[2] *= scale
        y_new[3] *= scale

        t = t + h
        for i in range(NSTATE):
            z[i] = y_new[i]
        n_steps += 1
        if n_rec < cap:
            rec_t[n_rec] = t
            rec_z[n_rec, :] = z
            n_rec += 1
        if done:
            break
        _rhs(r, eps, z, k[0])
        if err == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, 0.9 * err ** -0.2)
    return (status, t, z, n_steps, n_rej, t_turn, x_min, z_mark, max_drift, max_c, max_en, n_rec)
