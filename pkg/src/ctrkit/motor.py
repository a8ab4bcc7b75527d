"""Variable-gain position controller and simulated pneumatic drive.

The controller runs in three error bands: inside the tolerance band all
output is cut; in the mid band the proportional gain is shaped so the
commanded voltage sits exactly at the measured start/dead-band level
(depending on whether the motor is already moving); beyond the band a
constant gain takes over.  The simulated plant is a first-order-lag
turbine behind a long pneumatic line: transport delay, a dead-band around
the valve's closed point, and encoder quantisation -- the minimal plant
that shows both failure modes (stall at low gain, delay-driven limit cycle
at high gain) the schedule exists to fix.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import DomainError


@dataclass(frozen=True)
class ControllerParams:
    """Gain-schedule constants; voltages in volts, errors in encoder counts."""
    delta: int = 11                 # tolerance band, counts (1 degree)
    err_thresh: int = 1000          # upper bound of the variable-gain band (90 deg)
    v_start: float = 9.0            # breakaway voltage when stationary
    v_deadband: float = 3.5         # minimum voltage that sustains motion
    kp_const: float = 11.5
    kd: float = 4000.0
    ki: float = 0.0
    v_range: float = 20.0
    resolution_bits: int = 16
    omega_sample_period: float = 0.04   # encoder-rate estimator cadence, s
    omega_window: int = 3               # estimator samples per rate window

    def __post_init__(self):
        if not 0 < self.delta < self.err_thresh:
            raise DomainError("need 0 < delta < err_thresh",
                              code="controller.delta_range")
        if not self.v_deadband <= self.v_start <= 10.0:
            raise DomainError("need v_deadband <= v_start <= 10 V",
                              code="controller.v_order")

    @property
    def counts_scale(self) -> float:
        """Volts per (gain * count): v_range / 2^bits."""
        return self.v_range / 2.0 ** self.resolution_bits


@dataclass(frozen=True)
class MotorPlant:
    """Simulated pneumatic motor + transmission parameters."""
    nominal_speed_rpm: float = 11000.0
    gear_ratio: float = 400.0
    counts_per_rev: float = 4000.0
    transport_delay: float = 0.352
    plant_deadband: float = 3.45    # bipolar volts below which nothing moves
    time_constant: float = 0.05
    valve_center: float = 5.0

    def __post_init__(self):
        if min(self.nominal_speed_rpm, self.gear_ratio, self.counts_per_rev,
               self.time_constant) <= 0 or self.transport_delay < 0:
            raise DomainError("plant parameters must be positive "
                              "(delay nonnegative)", code="plant.nonpositive")

    @property
    def output_counts_per_s(self) -> float:
        """Output-shaft encoder rate at full valve opening."""
        return self.nominal_speed_rpm / 60.0 / self.gear_ratio * self.counts_per_rev


def rotational_axis_defaults():
    """Measured constants of the inner-tube rotation axis.

    The plant dead-band sits half a measurement increment below the
    characterised v_deadband: the stall voltage was bracketed with 0.1 V
    steps, so the midpoint of the bracket is the best estimate.
    """
    params = ControllerParams(v_start=9.0, v_deadband=3.5, kp_const=11.5)
    plant = MotorPlant(gear_ratio=400.0, plant_deadband=3.45)
    return params, plant


def translational_axis_defaults():
    """Measured constants of the tube translation axes."""
    params = ControllerParams(v_start=6.4, v_deadband=3.0, kp_const=9.8)
    plant = MotorPlant(gear_ratio=100.0, plant_deadband=2.95)
    return params, plant


def gain_schedule(err: float, omega: float, params: ControllerParams) -> float:
    """Proportional gain for the current error and motor state.

    ``omega`` is the encoder-rate estimate in counts per estimator window;
    magnitudes below one count read as stationary.  Inside the tolerance
    band the gain is zero; in the mid band it is shaped so Kp*err*scale
    equals v_start (stationary) or v_deadband (moving); beyond it the
    constant gain applies.
    """
    a = abs(err)
    if a <= params.delta:
        return 0.0
    if a <= params.err_thresh:
        v = params.v_deadband if abs(omega) >= 1.0 else params.v_start
        return v / (a * params.counts_scale)
    return params.kp_const


def command_voltage(err: float, d_err: float, kp: float,
                    params: ControllerParams) -> float:
    """Controller output (Kp*err + Kd*d_err)*scale, saturated to +/-10 V.

    ``d_err`` is the backward difference of the error per control sample.
    """
    v = (kp * err + params.kd * d_err) * params.counts_scale
    return max(-10.0, min(10.0, v))


def differential_map(v_bipolar: float) -> float:
    """Map the -10..10 V command to the 0..10 V valve signal (5 V = closed)."""
    if not -10.0 - 1e-9 <= v_bipolar <= 10.0 + 1e-9:
        raise DomainError("command voltage outside -10..10 V")
    return v_bipolar / 2.0 + 5.0


def naive_deadband_gain(params: ControllerParams) -> float:
    """Constant gain a plain PID needs to beat the dead-band at tolerance.

    V must reach v_deadband at err = delta, i.e. Kp = v_db/(delta*scale).
    This is the gain that exposes the delay-driven limit cycle.
    """
    return params.v_deadband / (params.delta * params.counts_scale)


@dataclass
class MotorSimResult:
    """Trace and settling analysis of one simulated move."""
    time: np.ndarray
    position_counts: np.ndarray
    encoder_counts: np.ndarray
    err_counts: np.ndarray
    voltage: np.ndarray
    voltage_applied: np.ndarray
    region: np.ndarray
    setpoint: int
    dt: float
    counts_per_rev: float
    settled: bool
    settle_time: float | None
    final_err: int
    oscillating: bool
    converged: bool          # settled within t_max

    @property
    def position_deg(self) -> np.ndarray:
        return self.position_counts / self.counts_per_rev * 360.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "position_deg", "err_counts", "voltage_v", "region"])
            pos_deg = self.position_deg
            for i in range(len(self.time)):
                w.writerow([f"{self.time[i]:.6f}", f"{pos_deg[i]:.9g}",
                            int(self.err_counts[i]), f"{self.voltage[i]:.9g}",
                            int(self.region[i])])


def simulate_move(setpoint_counts: float, plant: MotorPlant,
                  params: ControllerParams, dt: float = 1e-3,
                  t_max: float = 180.0, mode: str = "scheduled",
                  kp_fixed: float | None = None,
                  settle_hold: float = 3.0) -> MotorSimResult:
    """Closed-loop move simulation from rest at position zero.

    mode="scheduled" runs the variable-gain law; mode="constant" runs a
    plain PID with ``kp_fixed`` (default: the schedule's kp_const)
    everywhere.  The run stops early once the error has stayed inside the
    tolerance band with the motor at rest for ``settle_hold`` seconds;
    non-convergence within t_max is reported in the result, not raised.
    """
    if plant.transport_delay > 0 and dt > plant.transport_delay / 10.0:
        raise DomainError("dt must be at most transport_delay/10")
    if t_max <= 0:
        raise DomainError("t_max must be positive")
    if mode not in ("scheduled", "constant"):
        raise ValueError(f"unknown mode {mode!r}")
    setpoint = int(round(setpoint_counts))
    max_steps = int(round(t_max / dt))
    delay_steps = int(round(plant.transport_delay / dt))
    alpha = 1.0 - math.exp(-dt / plant.time_constant)
    om_steps = max(1, int(round(params.omega_sample_period / dt)))
    kp_fix = params.kp_const if kp_fixed is None else float(kp_fixed)
    (n_used, pos, enc, err, v_cmd, v_appl, region) = _kernels.motor_sim(
        float(setpoint), dt, max_steps, delay_steps, float(params.delta),
        float(params.err_thresh), params.v_start, params.v_deadband,
        params.kp_const, params.kd, params.counts_scale, plant.plant_deadband,
        alpha, plant.output_counts_per_s, om_steps, params.omega_window,
        1 if mode == "constant" else 0, kp_fix,
        int(round(settle_hold / dt)), 0.5)
    t = np.arange(n_used) * dt
    settled, settle_time, oscillating = _analyze_trace(
        err, region, dt, min_dwell_s=0.05)
    return MotorSimResult(
        time=t, position_counts=pos, encoder_counts=enc, err_counts=err,
        voltage=v_cmd, voltage_applied=v_appl, region=region,
        setpoint=setpoint, dt=dt, counts_per_rev=plant.counts_per_rev,
        settled=settled, settle_time=settle_time, final_err=int(err[-1]),
        oscillating=oscillating, converged=settled and n_used < max_steps)


def _analyze_trace(err, region, dt, min_dwell_s=0.05):
    """Settling and oscillation flags for a sim trace.

    Settled: the trace ends inside the tolerance band after an entry that
    dwelt at least ``min_dwell_s`` (brief pass-throughs at speed do not
    count).  Oscillating: not settled and the error keeps changing sign in
    the tail half of the trace (a sustained limit cycle), or the band was
    held and then left again.
    """
    n = len(region)
    dwell = max(1, int(round(min_dwell_s / dt)))
    in_band = region == 1
    # run-length scan for the first dwelled entry
    entry_end = None
    i = 0
    while i < n:
        if in_band[i]:
            j = i
            while j < n and in_band[j]:
                j += 1
            if j - i >= dwell:
                entry_end = j
                break
            i = j
        else:
            i += 1
    settled = entry_end is not None and entry_end == n and bool(in_band[-1])
    departed_after_hold = entry_end is not None and entry_end < n
    tail = err[n // 2:]
    signs = np.sign(tail[tail != 0])
    sign_changes = int(np.count_nonzero(np.diff(signs) != 0)) if signs.size else 0
    oscillating = (not settled) and (sign_changes >= 3 or departed_after_hold)
    settle_time = None
    if settled:
        # first index of the final in-band run
        k = n - 1
        while k > 0 and in_band[k - 1]:
            k -= 1
        settle_time = k * dt
    return settled, settle_time, oscillating
