"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot loops (segment-chain composition and the motor
simulation) plus an end-to-end IK batch on each backend.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import time

import numpy as np

from ctrkit._kernels import pure

try:
    from ctrkit import _core
except ImportError:
    _core = None


def timeit(fn, repeat, min_time=0.2):
    fn()     # warm up
    n = repeat
    while True:
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        dt = time.perf_counter() - t0
        if dt > min_time:
            return dt / n
        n *= 4


def bench_chain(backend, repeat):
    rng = np.random.default_rng(0)
    kappas = rng.normal(0.0, 0.03, 100)
    dss = rng.uniform(0.2, 0.4, 100)
    return timeit(lambda: backend.chain_transforms(kappas, dss), repeat)


def bench_motor(backend, repeat):
    args = (1600.0, 1e-3, 120_000, 352, 11.0, 1000.0, 9.0, 3.5, 11.5, 4000.0,
            20.0 / 2 ** 16, 3.45, 1.0 - math.exp(-1e-3 / 0.05),
            11000.0 / 60.0 / 400.0 * 4000.0, 40, 3, 0, 11.5, 3000, 0.5)
    return timeit(lambda: backend.motor_sim(*args), max(1, repeat // 20))


def bench_ik_batch(n_targets=200):
    """End-to-end IK solve batch through whichever backend is selected."""
    from ctrkit.ik import Planner
    from ctrkit.presets import (default_inner_material, default_inner_tube,
                                default_joint_limits, demo_tube_shape)
    shape = demo_tube_shape()
    planner = Planner(shape, default_inner_tube(shape),
                      default_inner_material(), default_joint_limits())
    rng = np.random.default_rng(1)
    targets = []
    while len(targets) < n_targets:
        p = rng.uniform([-8, -8, 20], [8, 8, 70])
        if planner.reachable(p):
            targets.append(p)
    t0 = time.perf_counter()
    for p in targets:
        planner.solve(p)
    return (time.perf_counter() - t0) / n_targets


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    rows = []
    for name, backend in (("pure", pure),) + (
            (("compiled", _core),) if _core is not None else ()):
        chain_t = bench_chain(backend, args.repeat)
        motor_t = bench_motor(backend, args.repeat)
        rows.append((name, chain_t, motor_t))

    print(f"{'backend':<10} {'chain(100 segs)':>18} {'motor sim(120k steps)':>24}")
    for name, chain_t, motor_t in rows:
        print(f"{name:<10} {chain_t * 1e6:>14.1f} us {motor_t * 1e3:>20.1f} ms")
    if len(rows) == 2:
        print(f"{'speedup':<10} {rows[0][1] / rows[1][1]:>14.1f} x  "
              f"{rows[0][2] / rows[1][2]:>19.1f} x")

    from ctrkit import _kernels
    ik_t = bench_ik_batch()
    print(f"\nIK solve via selected backend ({_kernels.backend_name()}): "
          f"{ik_t * 1e3:.2f} ms/target")


if __name__ == "__main__":
    main()
