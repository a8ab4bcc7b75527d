import numpy as np
import pytest

from ctrkit.errors import DomainError
from ctrkit.motor import (ControllerParams, MotorPlant, command_voltage,
                          differential_map, gain_schedule, naive_deadband_gain,
                          rotational_axis_defaults, simulate_move,
                          translational_axis_defaults)

ROT_PARAMS, ROT_PLANT = rotational_axis_defaults()
TRANS_PARAMS, TRANS_PLANT = translational_axis_defaults()
SCALE = 20.0 / 2 ** 16


# --------------------------------------------------------------- gain schedule
def test_schedule_tolerance_band_zero_gain():
    assert gain_schedule(5, 0.0, ROT_PARAMS) == 0.0
    assert gain_schedule(-11, 3.0, ROT_PARAMS) == 0.0


def test_schedule_measured_gains_at_band_edge():
    kp_trans = gain_schedule(1000, 2.0, TRANS_PARAMS)
    kp_rot = gain_schedule(1000, 2.0, ROT_PARAMS)
    assert kp_trans == pytest.approx(9.8, abs=0.05)
    assert kp_rot == pytest.approx(11.5, abs=0.05)


def test_schedule_mid_band_value():
    kp = gain_schedule(500, 2.0, TRANS_PARAMS)
    assert kp == pytest.approx(3.0 / (500 * SCALE), rel=1e-12)
    assert kp == pytest.approx(19.66, abs=0.01)


def test_schedule_stationary_uses_start_voltage():
    kp_still = gain_schedule(500, 0.0, ROT_PARAMS)
    kp_moving = gain_schedule(500, 1.5, ROT_PARAMS)
    assert kp_still * 500 * SCALE == pytest.approx(ROT_PARAMS.v_start)
    assert kp_moving * 500 * SCALE == pytest.approx(ROT_PARAMS.v_deadband)


def test_schedule_constant_region():
    assert gain_schedule(5000, 2.0, ROT_PARAMS) == ROT_PARAMS.kp_const


def test_schedule_continuous_at_threshold():
    for params in (ROT_PARAMS, TRANS_PARAMS):
        kp_edge = gain_schedule(params.err_thresh, 2.0, params)
        assert abs(kp_edge - params.kp_const) < 0.1


# -------------------------------------------------------------- command voltage
def test_command_voltage_value():
    v = command_voltage(1000, 0.0, 9.8, ROT_PARAMS)
    assert v == pytest.approx(2.99, abs=0.01)


def test_command_voltage_zero():
    assert command_voltage(0, 0.0, 11.5, ROT_PARAMS) == 0.0


def test_command_voltage_saturates():
    assert command_voltage(60000, 0.0, 11.5, ROT_PARAMS) == 10.0
    assert command_voltage(-60000, 0.0, 11.5, ROT_PARAMS) == -10.0


def test_mid_band_voltage_is_flat():
    # by construction the mid-band voltage equals the dead-band level for
    # every error in the band
    for err in (12, 100, 500, 999, 1000):
        kp = gain_schedule(err, 2.0, ROT_PARAMS)
        v = command_voltage(err, 0.0, kp, ROT_PARAMS)
        assert v == pytest.approx(ROT_PARAMS.v_deadband, rel=1e-12)


# ------------------------------------------------------------ differential map
def test_differential_map_closed_point():
    assert differential_map(0.0) == 5.0


def test_differential_map_endpoints():
    assert differential_map(10.0) == 10.0
    assert differential_map(-10.0) == 0.0


def test_differential_map_linear():
    assert differential_map(6.0) == 8.0


def test_differential_map_domain():
    with pytest.raises(DomainError):
        differential_map(11.0)


# ------------------------------------------------------------------ simulation
def test_simulate_within_tolerance_no_motion():
    res = simulate_move(5, ROT_PLANT, ROT_PARAMS, t_max=5.0)
    assert res.settled
    assert np.all(res.voltage == 0.0)
    assert np.all(res.position_counts == 0.0)


def test_simulate_144deg_settles_without_oscillation():
    res = simulate_move(144 / 360 * 4000, ROT_PLANT, ROT_PARAMS)
    assert res.settled
    assert not res.oscillating
    assert abs(res.final_err) <= ROT_PARAMS.delta
    # ends inside the tolerance band with the motor parked
    assert res.region[-1] == 1


def test_simulate_translational_axis_settles():
    res = simulate_move(20000, TRANS_PLANT, TRANS_PARAMS)
    assert res.settled and not res.oscillating
    assert abs(res.final_err) <= TRANS_PARAMS.delta


def test_constant_gain_at_schedule_value_stalls():
    # plain PID at the schedule's own constant gain cannot beat the
    # dead-band near the setpoint: it parks with a large residual error
    res = simulate_move(40000, ROT_PLANT, ROT_PARAMS, mode="constant",
                        kp_fixed=ROT_PARAMS.kp_const, t_max=60.0)
    assert not res.settled
    assert abs(res.final_err) > ROT_PARAMS.delta


def test_constant_gain_beating_deadband_limit_cycles():
    # raising the gain enough to beat the dead-band at tolerance turns the
    # transport delay into a sustained limit cycle
    kp = naive_deadband_gain(ROT_PARAMS)
    res = simulate_move(40000, ROT_PLANT, ROT_PARAMS, mode="constant",
                        kp_fixed=kp, t_max=60.0)
    assert res.oscillating
    assert not res.settled
    tail = res.err_counts[len(res.err_counts) // 2:]
    assert np.abs(tail).max() > ROT_PARAMS.delta


def test_scheduled_mode_never_flags_oscillation():
    rng = np.random.default_rng(3)
    for _ in range(5):
        setpoint = int(rng.integers(-40000, 40000))
        res = simulate_move(setpoint, ROT_PLANT, ROT_PARAMS)
        assert res.settled and not res.oscillating


def test_plant_deadband_blocks_small_voltages():
    # voltages below the plant dead-band must not move the motor: a
    # setpoint small enough that the scheduled band is never exceeded
    params = ControllerParams(v_start=2.0, v_deadband=2.0, kp_const=11.5)
    res = simulate_move(500, ROT_PLANT, params, t_max=3.0)
    assert np.all(res.position_counts == 0.0)
    assert np.abs(res.voltage_applied).max() <= ROT_PLANT.plant_deadband


def test_simulation_deterministic():
    r1 = simulate_move(1600, ROT_PLANT, ROT_PARAMS)
    r2 = simulate_move(1600, ROT_PLANT, ROT_PARAMS)
    assert np.array_equal(r1.position_counts, r2.position_counts)
    assert np.array_equal(r1.voltage, r2.voltage)


def test_simulate_dt_precondition():
    with pytest.raises(DomainError):
        simulate_move(1000, ROT_PLANT, ROT_PARAMS, dt=0.05)


def test_trace_csv(tmp_path):
    res = simulate_move(200, ROT_PLANT, ROT_PARAMS, t_max=20.0)
    path = tmp_path / "trace.csv"
    res.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "t_s,position_deg,err_counts,voltage_v,region"


# ---------------------------------------------------------------- param checks
def test_params_invariants():
    with pytest.raises(DomainError):
        ControllerParams(delta=0)
    with pytest.raises(DomainError):
        ControllerParams(v_start=2.0, v_deadband=3.0)
    with pytest.raises(DomainError):
        MotorPlant(gear_ratio=-1.0)
