import json
from importlib.resources import files

import pytest

from twinsync.facade.config import parse_scenario
from twinsync.kinematics import panda_chain

# Start joints for the bundled Y-axis sweep (end effector at (0.45, -0.4, 0.3)).
SWEEP_START_JOINTS = [-0.338037, 0.347438, -0.400936, -1.986118, -0.047334, 2.27161, 0.79]
SWEEP_ORIENT = {"roll": 2.993759, "pitch": -0.090516, "yaw": -1.471808}


@pytest.fixture(scope="session")
def panda():
    return panda_chain()


def scenario_doc(**overrides):
    """Baseline Y-sweep scenario document; override fields per test."""
    doc = {
        "v": 1,
        "name": "test",
        "seed": 42,
        "chain": "panda7",
        "initial_joints": list(SWEEP_START_JOINTS),
        "physical": {"gain": 8.0},
        "virtual": {"gain": 10.0},
        "goal": {
            "target": dict(x=0.45, y=0.4, z=0.3, **SWEEP_ORIENT),
            "max_step_m": 0.01,
        },
        "bounds": {"delta_q_m": 0.15, "delta_alpha_ms": 5.0, "delta_b_m": 0.05},
        "channels": {},
        "obstacles": [],
        "hitl_mode": "auto-approve",
    }
    doc.update(overrides)
    return doc


def make_config(**overrides):
    return parse_scenario(scenario_doc(**overrides))


def bundled_scenario(name: str):
    path = files("twinsync.scenarios") / name
    return json.loads(path.read_text())
