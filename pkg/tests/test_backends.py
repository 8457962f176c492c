"""Compiled-vs-pure kernel parity: same arithmetic, same results."""

import numpy as np
import pytest

from twinsync.kinematics import _pure, panda_chain

compiled = pytest.importorskip(
    "twinsync._kernels", reason="compiled kernels not built; pure fallback active"
)


@pytest.fixture(scope="module")
def random_cases():
    panda = panda_chain()
    rng = np.random.default_rng(21)
    return panda, [
        rng.uniform(panda.joint_limits[:, 0], panda.joint_limits[:, 1])
        for _ in range(200)
    ]


def test_fk_parity(random_cases):
    panda, qs = random_cases
    for q in qs:
        a = np.array(compiled.fk_pose(panda.dh, q))
        b = np.array(_pure.fk_pose(panda.dh, q))
        assert np.max(np.abs(a - b)) <= 1e-13


def test_jacobian_parity(random_cases):
    panda, qs = random_cases
    for q in qs:
        ja = np.empty((6, 7))
        jb = np.empty((6, 7))
        compiled.jacobian(panda.dh, q, ja)
        _pure.jacobian(panda.dh, q, jb)
        assert np.max(np.abs(ja - jb)) <= 1e-13


def test_backend_selection_env(monkeypatch):
    # TWINSYNC_PURE forces the fallback at import time.
    import importlib
    import sys

    monkeypatch.setenv("TWINSYNC_PURE", "1")
    saved = sys.modules.pop("twinsync.kinematics.backend", None)
    try:
        backend = importlib.import_module("twinsync.kinematics.backend")
        assert backend.KERNEL_NAME == "pure"
    finally:
        sys.modules.pop("twinsync.kinematics.backend", None)
        if saved is not None:
            sys.modules["twinsync.kinematics.backend"] = saved
