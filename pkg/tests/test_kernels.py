"""Parity between the compiled kernel extension and the pure-Python fallback."""
import math

import numpy as np
import pytest

from ctrkit import _kernels
from ctrkit._kernels import pure

try:
    from ctrkit import _core
    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled extension not built")


def motor_args(setpoint=1600.0, mode_const=0, kp_fixed=11.5):
    return (setpoint, 1e-3, 120_000, 352, 11.0, 1000.0, 9.0, 3.5, 11.5,
            4000.0, 20.0 / 2 ** 16, 3.45, 1.0 - math.exp(-1e-3 / 0.05),
            11000.0 / 60.0 / 400.0 * 4000.0, 40, 3, mode_const, kp_fixed,
            3000, 0.5)


def test_backend_reported():
    assert _kernels.backend_name() in ("compiled", "pure")


def test_pure_chain_identity():
    T, pts = pure.chain_transforms(np.zeros(10), np.full(10, 0.5))
    assert np.allclose(T[:3, :3], np.eye(3))
    assert T[2, 3] == pytest.approx(5.0)
    assert pts.shape == (11, 3)


@needs_compiled
def test_chain_parity_random_inputs():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 300))
        kappas = rng.normal(0.0, 0.05, n)
        # sprinkle near-zero curvatures to exercise the series branch
        kappas[rng.random(n) < 0.2] *= 1e-9
        dss = rng.uniform(0.01, 1.0, n)
        Tc, pc = _core.chain_transforms(kappas, dss)
        Tp, pp = pure.chain_transforms(kappas, dss)
        assert np.array_equal(Tc, Tp)
        assert np.array_equal(pc, pp)


@needs_compiled
def test_motor_parity_scheduled_and_constant():
    for mode, kp in ((0, 11.5), (1, 11.5), (1, 1042.0)):
        rc = _core.motor_sim(*motor_args(40000.0, mode, kp))
        rp = pure.motor_sim(*motor_args(40000.0, mode, kp))
        assert rc[0] == rp[0]
        for a, b in zip(rc[1:], rp[1:]):
            assert np.array_equal(a, b)


@needs_compiled
def test_selected_backend_matches_pure_through_api():
    kappas = np.linspace(0.0, 0.03, 100)
    dss = np.full(100, 0.29)
    T_sel, _ = _kernels.chain_transforms(kappas, dss)
    T_pure, _ = pure.chain_transforms(kappas, dss)
    assert np.abs(T_sel - T_pure).max() < 1e-12
