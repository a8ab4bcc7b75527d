import math

import numpy as np
import pytest

from ctrkit.errors import UnreachableTargetError
from ctrkit.ik import (MovePlan, Planner, apply_torsion_plant, compensate,
                       plan_move, solve_ik)
from ctrkit.kinematics import JointConfig, forward_kinematics


def sample_reachable_targets(planner, n, seed, lo=(-8, -8, 20), hi=(8, 8, 70)):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = rng.uniform(lo, hi)
        if planner.reachable(p):
            out.append(p)
    return out


# ----------------------------------------------------------------- solve_ik
def test_ik_recovers_fk_generated_target(planner, demo_shape):
    q_true = JointConfig(d=22.0, s=17.5, theta=0.0)
    tip = forward_kinematics(demo_shape, q_true).tip_position
    q = planner.solve(tip)
    assert q.d == pytest.approx(q_true.d, abs=1e-6)
    assert q.s == pytest.approx(q_true.s, abs=1e-6)
    assert q.theta == pytest.approx(0.0, abs=1e-9)


def test_ik_axis_degeneracy_tie_break(planner):
    q = planner.solve([0.0, 0.0, 40.0])
    assert q.theta == 0.0
    assert q.s == 0.0
    assert q.d == pytest.approx(40.0)


def test_ik_roundtrip_batch(planner):
    targets = sample_reachable_targets(planner, 200, seed=101)
    for p in targets:
        q = planner.solve(p)
        tip = planner.forward(q).tip_position
        assert np.linalg.norm(tip - p) < 0.01


def test_ik_unreachable_radial_reports_bound(planner):
    with pytest.raises(UnreachableTargetError) as exc:
        planner.solve([20.0, 20.0, 40.0])
    assert exc.value.radial_max == pytest.approx(planner.radial_max)
    assert exc.value.radial_requested == pytest.approx(math.hypot(20, 20))


def test_ik_unreachable_travel(planner):
    # on-axis far beyond the travel range
    with pytest.raises(UnreachableTargetError) as exc:
        planner.solve([0.0, 0.0, 150.0])
    assert exc.value.d_required is not None


def test_solve_ik_function_wrapper(demo_shape):
    q = solve_ik([0.0, 0.0, 30.0], demo_shape)
    assert q.d == pytest.approx(30.0)


# ----------------------------------------------------------------- compensate
def phi_table(s):
    # synthetic monotone-decreasing windup profile
    return 0.03 * (1.0 - s / 29.0)


def test_compensate_no_rotation_no_compensation():
    assert compensate(1.0, 20.0, 1.0, 10.0, phi_table) == 1.0


def test_compensate_advancing_uses_new_insertion():
    # advancing 10 -> 20 while rotating forward: add phi at the new insertion
    got = compensate(1.0, 20.0, 0.5, 10.0, phi_table)
    assert got == pytest.approx(1.0 + phi_table(20.0))


def test_compensate_retracting_uses_current_insertion():
    # retracting 20 -> 10 while rotating backward: subtract phi at the
    # current insertion (retraction itself applies no torque)
    got = compensate(1.0, 10.0, 1.5, 20.0, phi_table)
    assert got == pytest.approx(1.0 - phi_table(20.0))


def test_compensate_sign_follows_rotation_direction():
    up = compensate(0.8, 15.0, 0.2, 15.0, phi_table)
    down = compensate(0.2, 15.0, 0.8, 15.0, phi_table)
    assert up - 0.8 == pytest.approx(phi_table(15.0))
    assert down - 0.2 == pytest.approx(-phi_table(15.0))


def test_torsion_plant_cancels_compensation():
    theta_cmd = compensate(1.2, 18.0, 0.3, 6.0, phi_table)
    landed = apply_torsion_plant(theta_cmd, 18.0, 0.3, 6.0, phi_table)
    assert landed == pytest.approx(1.2, abs=1e-12)


# ------------------------------------------------------------------ plan_move
def test_plan_axis_target_pure_translation(planner):
    plan = planner.plan(JointConfig(0.0, 0.0, 0.0), [0.0, 0.0, 35.0])
    assert plan.theta_command == 0.0
    assert plan.s_command == 0.0
    assert plan.d_command == pytest.approx(35.0)
    assert [a["action"] for a in plan.sequence] == ["rotate", "translate"]


def test_plan_is_deterministic(planner):
    current = JointConfig(5.0, 10.0, 0.3)
    target = [3.0, -4.0, 45.0]
    p1 = planner.plan(current, target)
    p2 = planner.plan(current, target)
    assert p1 == p2


def test_plan_move_function(demo_shape, inner_tube, inner_material):
    plan = plan_move(JointConfig(0, 0, 0), [2.0, -3.0, 40.0], demo_shape,
                     inner_tube, inner_material)
    assert isinstance(plan, MovePlan)
    assert len(plan.sequence) == 2


def test_paired_plant_compensation(planner):
    """Executing through a torsion-afflicted plant lands on target when the
    command is compensated, and misses by the windup when it is not."""
    rng = np.random.default_rng(77)
    current = JointConfig(10.0, 12.0, -0.4)
    checked = 0
    while checked < 40:
        p = rng.uniform([-8, -8, 20], [8, 8, 70])
        if not planner.reachable(p):
            continue
        nominal = planner.solve(p)
        s_branch = nominal.s if current.s < nominal.s else current.s
        if planner.phi(s_branch) < 1e-4 or \
                abs(nominal.theta - current.theta) < 1e-6:
            continue
        comp = planner.plan(current, p, compensated=True)
        raw = planner.plan(current, p, compensated=False)
        for plan, expect_small in ((comp, True), (raw, False)):
            theta_exec = apply_torsion_plant(
                plan.theta_command, plan.s_command, current.theta, current.s,
                planner.phi)
            tip = planner.forward(JointConfig(
                plan.d_command, plan.s_command, theta_exec)).tip_position
            err = np.linalg.norm(tip - p)
            if expect_small:
                assert err < 0.01
            else:
                assert err > 0.0
        checked += 1
