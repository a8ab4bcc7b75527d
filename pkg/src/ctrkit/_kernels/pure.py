"""Pure-Python fallback implementations of the hot kernels.

These mirror the compiled extension (``ctrkit._core``) operation for
operation so both backends produce identical traces.  Plain floats are used
in the inner loops; numpy only packages the results.
"""
import math

import numpy as np

BACKEND = "pure"


def chain_transforms(kappas, dss):
    """Compose a chain of planar constant-curvature segment transforms.

    Each segment bends about the local x-axis with curvature ``kappas[j]``
    over arc length ``dss[j]`` (positive curvature bends toward -y).

    Returns
    -------
    T : (4, 4) ndarray
        Product of all segment transforms.
    pts : (n + 1, 3) ndarray
        Partial-product translations (backbone points), starting at the
        origin.
    """
    kappas = np.ascontiguousarray(kappas, dtype=float)
    dss = np.ascontiguousarray(dss, dtype=float)
    n = kappas.shape[0]
    if dss.shape[0] != n:
        raise ValueError("kappas and dss must have equal length")
    pts = np.empty((n + 1, 3))
    pts[0] = 0.0
    # rotation columns r1 = R[:,1], r2 = R[:,2]; R[:,0] stays (1,0,0)
    r1x, r1y, r1z = 0.0, 1.0, 0.0
    r2x, r2y, r2z = 0.0, 0.0, 1.0
    px, py, pz = 0.0, 0.0, 0.0
    for j in range(n):
        k = kappas[j]
        ds = dss[j]
        a = k * ds
        ca = math.cos(a)
        sa = math.sin(a)
        if abs(a) < 1e-7:
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
        r1x, r1y, r1z = n1x, n1y, n1z
        pts[j + 1, 0] = px
        pts[j + 1, 1] = py
        pts[j + 1, 2] = pz
    # column 0 of the rotation never changes for bends about local x
    T = np.array([
        [1.0, r1x, r2x, px],
        [0.0, r1y, r2y, py],
        [0.0, r1z, r2z, pz],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return T, pts


def motor_sim(setpoint, dt, max_steps, delay_steps, delta, err_thresh,
              v_start, v_db, kp_const, kd, scale, db_plant, alpha,
              nominal_cps, om_steps, om_window, mode_const, kp_fixed,
              settle_hold_steps, rate_eps):
    """Discrete-time closed loop: gain-scheduled controller + delayed plant.

    Returns (n_used, pos, enc, err, v_cmd, v_applied, region) arrays.
    ``mode_const`` nonzero runs a plain PID with proportional gain
    ``kp_fixed`` everywhere (no scheduling, no zero-voltage tolerance band).
    """
    pos_a = np.empty(max_steps)
    enc_a = np.empty(max_steps, dtype=np.int64)
    err_a = np.empty(max_steps, dtype=np.int64)
    vcmd_a = np.empty(max_steps)
    vappl_a = np.empty(max_steps)
    region_a = np.empty(max_steps, dtype=np.int8)

    buf = [0.0] * (delay_steps + 1)  # ring buffer of commanded voltages
    hist = [0.0] * (om_window + 1)
    hist_fill = 0
    moving = False
    pos = 0.0
    rate = 0.0
    err_prev = float(setpoint)
    settle_run = 0
    n_used = max_steps
    for k in range(max_steps):
        enc = math.floor(pos)
        err = setpoint - enc
        if k % om_steps == 0:
            for i in range(om_window):
                hist[i] = hist[i + 1]
            hist[om_window] = enc
            if hist_fill <= om_window:
                hist_fill += 1
            moving = hist_fill > om_window and abs(hist[om_window] - hist[0]) >= 1.0
        a = abs(err)
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
        mag = abs(vd) - db_plant
        if mag <= 0.0:
            target = 0.0
        else:
            target = (mag / (10.0 - db_plant)) * nominal_cps
            if vd < 0.0:
                target = -target
        rate += (target - rate) * alpha
        pos += rate * dt
        pos_a[k] = pos
        enc_a[k] = enc
        err_a[k] = err
        vcmd_a[k] = v
        vappl_a[k] = vd
        region_a[k] = region
        err_prev = err
        if region == 1 and abs(rate) < rate_eps:
            settle_run += 1
            if settle_run >= settle_hold_steps:
                n_used = k + 1
                break
        else:
            settle_run = 0
    return (n_used, pos_a[:n_used], enc_a[:n_used], err_a[:n_used],
            vcmd_a[:n_used], vappl_a[:n_used], region_a[:n_used])
