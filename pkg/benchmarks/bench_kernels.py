"""Compiled vs pure kernel benchmark.

Times the two hot kernels (forward kinematics, geometric Jacobian) and one
full scenario run under each backend. Run from the repo root:

    python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time
from importlib.resources import files

import numpy as np


def bench_kernels(kernels, dh, qs, reps=5):
    out = np.empty((6, dh.shape[0]))
    t0 = time.perf_counter()
    for _ in range(reps):
        for q in qs:
            kernels.fk_pose(dh, q)
    fk_us = (time.perf_counter() - t0) / (reps * len(qs)) * 1e6
    t0 = time.perf_counter()
    for _ in range(reps):
        for q in qs:
            kernels.jacobian(dh, q, out)
    jac_us = (time.perf_counter() - t0) / (reps * len(qs)) * 1e6
    return fk_us, jac_us


def bench_scenario_subprocess(pure: bool) -> float:
    """Full free-motion run in a fresh interpreter so backend choice sticks."""
    code = (
        "import json, time; "
        "from importlib.resources import files; "
        "from twinsync.facade.config import parse_scenario; "
        "from twinsync.controlblock import run_scenario; "
        "doc = json.loads((files('twinsync.scenarios') / 'free_motion.json').read_text()); "
        "cfg = parse_scenario(doc); "
        "t0 = time.perf_counter(); run_scenario(cfg); "
        "print(time.perf_counter() - t0)"
    )
    env = dict(os.environ, TWINSYNC_PURE="1" if pure else "0")
    result = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    return float(result.stdout.strip().splitlines()[-1])


def main():
    from twinsync.kinematics import _pure, panda_chain

    try:
        from twinsync import _kernels as compiled
    except ImportError:
        compiled = None

    panda = panda_chain()
    rng = np.random.default_rng(0)
    qs = [
        np.ascontiguousarray(
            rng.uniform(panda.joint_limits[:, 0], panda.joint_limits[:, 1])
        )
        for _ in range(2000)
    ]

    print(f"{'kernel':<22}{'pure':>12}{'compiled':>12}{'speedup':>10}")
    pure_fk, pure_jac = bench_kernels(_pure, panda.dh, qs)
    if compiled is not None:
        comp_fk, comp_jac = bench_kernels(compiled, panda.dh, qs)
        print(f"{'fk_pose (us/call)':<22}{pure_fk:>12.2f}{comp_fk:>12.2f}{pure_fk / comp_fk:>9.1f}x")
        print(f"{'jacobian (us/call)':<22}{pure_jac:>12.2f}{comp_jac:>12.2f}{pure_jac / comp_jac:>9.1f}x")
    else:
        print(f"{'fk_pose (us/call)':<22}{pure_fk:>12.2f}{'n/a':>12}")
        print(f"{'jacobian (us/call)':<22}{pure_jac:>12.2f}{'n/a':>12}")

    pure_run = bench_scenario_subprocess(pure=True)
    if compiled is not None:
        comp_run = bench_scenario_subprocess(pure=False)
        print(
            f"{'free-motion run (s)':<22}{pure_run:>12.2f}{comp_run:>12.2f}"
            f"{pure_run / comp_run:>9.1f}x"
        )
    else:
        print(f"{'free-motion run (s)':<22}{pure_run:>12.2f}{'n/a':>12}")


if __name__ == "__main__":
    main()
