# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: segment-chain composition and the motor loop.

Kept in lockstep with ctrkit._kernels.pure -- same operations in the same
order so traces agree between backends.
"""
from libc.math cimport cos, sin, floor, fabs

import numpy as np

BACKEND = "compiled"


def chain_transforms(kappas, dss):
    """Compose planar constant-curvature segment transforms.

    Returns (T, pts): the 4x4 product and the (n+1, 3) backbone points.
    """
    cdef double[::1] k_view = np.ascontiguousarray(kappas, dtype=np.float64)
    cdef double[::1] d_view = np.ascontiguousarray(dss, dtype=np.float64)
    cdef Py_ssize_t n = k_view.shape[0]
    if d_view.shape[0] != n:
        raise ValueError("kappas and dss must have equal length")
    pts_arr = np.empty((n + 1, 3), dtype=np.float64)
    cdef double[:, ::1] pts = pts_arr
    cdef double r1x = 0.0, r1y = 1.0, r1z = 0.0
    cdef double r2x = 0.0, r2y = 0.0, r2z = 1.0
    cdef double px = 0.0, py = 0.0, pz = 0.0
    cdef double k, ds, a, ca, sa, ty, tz, n1x, n1y, n1z
    cdef Py_ssize_t j
    pts[0, 0] = 0.0
    pts[0, 1] = 0.0
    pts[0, 2] = 0.0
    for j in range(n):
        k = k_view[j]
        ds = d_view[j]
        a = k * ds
        ca = cos(a)
        sa = sin(a)
        if fabs(a) < 1e-7:
            ty = -k * ds * ds * 0.5
            tz = ds
        else:
            ty = (ca - 1.0) / k
            tz = sa / k
        px += r1x * ty + r2x * tz
        py += r1y * ty + r2y * tz
        pz += r1z * ty + r2z * tz
        n1x = r1x * ca + r2x * sa
        n1y = r1y * ca + r2y * sa
        n1z = r1z * ca + r2z * sa
        r2x = -r1x * sa + r2x * ca
        r2y = -r1y * sa + r2y * ca
        r2z = -r1z * sa + r2z * ca
        r1x = n1x
        r1y = n1y
        r1z = n1z
        pts[j + 1, 0] = px
        pts[j + 1, 1] = py
        pts[j + 1, 2] = pz
    T = np.array([
        [1.0, r1x, r2x, px],
        [0.0, r1y, r2y, py],
        [0.0, r1z, r2z, pz],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return T, pts_arr


def motor_sim(double setpoint, double dt, int max_steps, int delay_steps,
              double delta, double err_thresh, double v_start, double v_db,
              double kp_const, double kd, double scale, double db_plant,
              double alpha, double nominal_cps, int om_steps, int om_window,
              int mode_const, double kp_fixed, int settle_hold_steps,
              double rate_eps):
    """Discrete-time controller + delayed dead-banded plant loop."""
    pos_arr = np.empty(max_steps, dtype=np.float64)
    enc_arr = np.empty(max_steps, dtype=np.int64)
    err_arr = np.empty(max_steps, dtype=np.int64)
    vcmd_arr = np.empty(max_steps, dtype=np.float64)
    vappl_arr = np.empty(max_steps, dtype=np.float64)
    region_arr = np.empty(max_steps, dtype=np.int8)
    cdef double[::1] pos_v = pos_arr
    cdef long long[::1] enc_v = enc_arr
    cdef long long[::1] err_v = err_arr
    cdef double[::1] vcmd_v = vcmd_arr
    cdef double[::1] vappl_v = vappl_arr
    cdef signed char[::1] region_v = region_arr

    buf_arr = np.zeros(delay_steps + 1, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    hist_arr = np.zeros(om_window + 1, dtype=np.float64)
    cdef double[::1] hist = hist_arr

    cdef int hist_fill = 0
    cdef bint moving = 0
    cdef double pos = 0.0, rate = 0.0
    cdef double err_prev = setpoint
    cdef int settle_run = 0
    cdef int n_used = max_steps
    cdef Py_ssize_t k
    cdef int i, region
    cdef double enc, err, a, v, kp, vd, mag, target

    for k in range(max_steps):
        enc = floor(pos)
        err = setpoint - enc
        if k % om_steps == 0:
            for i in range(om_window):
                hist[i] = hist[i + 1]
            hist[om_window] = enc
            if hist_fill <= om_window:
                hist_fill += 1
            moving = hist_fill > om_window and fabs(hist[om_window] - hist[0]) >= 1.0
        a = fabs(err)
        if a <= delta:
            region = 1
        elif a <= err_thresh:
            region = 2
        else:
            region = 3
        if mode_const:
            v = (kp_fixed * err + kd * (err - err_prev)) * scale
            if v > 10.0:
                v = 10.0
            elif v < -10.0:
                v = -10.0
        elif region == 1:
            v = 0.0
        else:
            if region == 2:
                kp = (v_db if moving else v_start) / (a * scale)
            else:
                kp = kp_const
            v = (kp * err + kd * (err - err_prev)) * scale
            if v > 10.0:
                v = 10.0
            elif v < -10.0:
                v = -10.0
        buf[k % (delay_steps + 1)] = v
        if k >= delay_steps:
            vd = buf[(k - delay_steps) % (delay_steps + 1)]
        else:
            vd = 0.0
        mag = fabs(vd) - db_plant
        if mag <= 0.0:
            target = 0.0
        else:
            target = (mag / (10.0 - db_plant)) * nominal_cps
            if vd < 0.0:
                target = -target
        rate += (target - rate) * alpha
        pos += rate * dt
        pos_v[k] = pos
        enc_v[k] = <long long>enc
        err_v[k] = <long long>err
        vcmd_v[k] = v
        vappl_v[k] = vd
        region_v[k] = <signed char>region
        err_prev = err
        if region == 1 and fabs(rate) < rate_eps:
            settle_run += 1
            if settle_run >= settle_hold_steps:
                n_used = k + 1
                break
        else:
            settle_run = 0
    return (n_used, pos_arr[:n_used], enc_arr[:n_used], err_arr[:n_used],
            vcmd_arr[:n_used], vappl_arr[:n_used], region_arr[:n_used])
