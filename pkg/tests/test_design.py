import numpy as np
import pytest

from ctrkit.design import (BendingReport, TubePair, bending_report,
                           cycling_retention_check, design_table, kappa_limit,
                           max_precurvature, reference_design_rows)
from ctrkit.errors import DomainError
from ctrkit.shape import PlanarShape
from ctrkit.torsion import MaterialModel, TubeSpec

NYLON = MaterialModel(4.0, 2.7, 0.10, 0.17)
GLASS = MaterialModel(74.0, 30.0, 0.10, 0.17)


def pair_with_outer_id(outer_id_mm, inner_od_mm=6.0):
    inner = TubeSpec(inner_od_mm / 2, inner_od_mm / 2 - 1.0, 250.0, 29.0)
    outer = TubeSpec(outer_id_mm / 2 + 0.865, outer_id_mm / 2, 242.0, 0.0)
    return TubePair(inner, NYLON, outer, GLASS)


# ----------------------------------------------------------- max precurvature
def test_max_precurvature_design_point():
    # 10% strain on a 3 mm outer radius: minimum elastic bend radius 30 mm
    k = max_precurvature(NYLON, 3.0, 0.0)
    assert 1.0 / k == pytest.approx(30.0, abs=1e-9)


def test_max_precurvature_no_headroom():
    tiny = MaterialModel(4.0, 2.7, 1e-12, 0.17)
    assert max_precurvature(tiny, 3.0, 0.021) == pytest.approx(0.021)


def test_max_precurvature_small_tube():
    k = max_precurvature(NYLON, 1.1, 0.0)
    assert k == pytest.approx(0.1 / 1.1)
    assert 1.0 / k == pytest.approx(11.0)


# ----------------------------------------------------------------- kappa limit
def test_kappa_limit_zero_clearance():
    assert kappa_limit(pair_with_outer_id(6.0), 29.0) == 0.0


def test_kappa_limit_continuous_at_zero_clearance():
    values = [kappa_limit(pair_with_outer_id(6.0 + c), 29.0)
              for c in (0.4, 0.2, 0.1, 0.05, 0.02)]
    assert all(a > b > 0 for a, b in zip(values, values[1:]))
    assert values[-1] < 5e-4


def test_kappa_limit_matches_dense_scan():
    pair = pair_with_outer_id(8.0, inner_od_mm=6.0)
    s_max = 29.0
    k = kappa_limit(pair, s_max)
    grid = np.linspace(1e-6, 0.2, 2_000_001)
    r = (np.cos(grid * s_max) - 1) / grid - 3.0 * np.cos(grid * s_max) + (8.0 - 3.0)
    idx = np.nonzero(np.diff(np.sign(r)))[0][0]
    # refine by bisection on the scan bracket
    lo, hi = grid[idx], grid[idx + 1]
    for _ in range(60):
        mid = (lo + hi) / 2
        val = (np.cos(mid * s_max) - 1) / mid - 3.0 * np.cos(mid * s_max) + 5.0
        if val > 0:
            lo = mid
        else:
            hi = mid
    assert k == pytest.approx((lo + hi) / 2, abs=1e-8)


def test_kappa_limit_monotone_in_clearance():
    vals = [kappa_limit(pair_with_outer_id(i), 29.0)
            for i in (6.0, 6.2, 6.5, 7.0, 8.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_pair_invariants():
    with pytest.raises(DomainError):
        pair_with_outer_id(5.5)    # inner OD 6 > outer ID 5.5
    assert pair_with_outer_id(6.2).clearance == pytest.approx(0.2)


# -------------------------------------------------------------- bending report
def test_bending_ratio_identity_reference_rows(demo_shape):
    table = design_table(reference_design_rows(), shape=demo_shape)
    for row in table[:3]:
        ratio = row["f_bend_n"] / row["stiffness_n_per_rad"]
        assert ratio == pytest.approx(27.0 / 20.0, abs=1e-3)
    # variable-curvature row: ratio equals the integrated bend angle
    var = table[3]
    assert var["f_bend_n"] / var["stiffness_n_per_rad"] == pytest.approx(
        var["bend_angle_rad"], rel=1e-9)


def test_bending_straight_tube_zero_force():
    tube = TubeSpec(3.0, 2.0, 250.0, 29.0)
    straight = PlanarShape([0.0, 0.0, 0.0], 29.0)
    rep = bending_report(tube, NYLON, shape=straight)
    assert rep.f_bend_n == 0.0
    assert rep.stiffness_n_per_rad == 0.0


def test_bending_matches_beam_theory_estimate():
    # for a constant-curvature design the reported force is exactly the
    # beam-theory tip force E*I*kappa/LoC
    tube = TubeSpec(3.0, 2.0, 250.0, 27.0)
    rep = bending_report(tube, NYLON, roc=20.0, loc=27.0)
    ei = NYLON.e_mpa * tube.bending_moment_of_area
    assert rep.f_bend_n == pytest.approx(ei * (1 / 20.0) / 27.0, rel=1e-12)


def test_bending_material_ordering():
    # at equal geometry a metal tube takes far more force than nylon
    tube = TubeSpec(3.0, 2.0, 250.0, 27.0)
    nylon = bending_report(tube, NYLON, roc=20.0, loc=27.0)
    nitinol = bending_report(tube, MaterialModel(74.0, 28.0, 0.10, 0.17),
                             roc=20.0, loc=27.0)
    assert nitinol.f_bend_n > 10 * nylon.f_bend_n
    assert nitinol.f_bend_n / nylon.f_bend_n == pytest.approx(74 / 4.0)


def test_bending_requires_geometry():
    tube = TubeSpec(3.0, 2.0, 250.0, 27.0)
    with pytest.raises(DomainError):
        bending_report(tube, NYLON)


# ------------------------------------------------------------------- cycling
def test_cycling_retention_pass():
    assert cycling_retention_check(32.4, 33.4)          # 3.1% change
    assert cycling_retention_check(30.0, 30.0)


def test_cycling_retention_fail():
    assert not cycling_retention_check(30.0, 40.0)


def test_cycling_retention_domain():
    with pytest.raises(DomainError):
        cycling_retention_check(-1.0, 30.0)
