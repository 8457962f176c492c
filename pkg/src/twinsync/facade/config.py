"""Scenario config: one JSON document binding every loop input.

Schema is versioned ("v": 1) and documented in docs/config.md. Validation
errors name the offending field path. TWINSYNC_SEED in the environment
overrides the config seed.
"""

import json
import os
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from twinsync.controlblock import AUTO_MODE, GATE_MODE, Bounds, config_fingerprint
from twinsync.errors import ConfigError, DomainError
from twinsync.kinematics import PANDA_HOME, KinematicChain, Pose, chain_from_config
from twinsync.robotsim import RobotConfig
from twinsync.trajectory import Obstacle, TrajectoryGoal
from twinsync.twinlink import DEFAULT_SYNC_TIMEOUT_MS, ChannelConfig

__all__ = ["ScenarioConfig", "parse_scenario", "load_scenario", "CHANNEL_NAMES"]

CHANNEL_NAMES = ("cmd_physical", "cmd_virtual", "state_physical", "state_virtual")

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    chain: KinematicChain
    initial_joints: np.ndarray
    physical: RobotConfig
    virtual: RobotConfig
    channels: dict
    bounds: Bounds
    goal: TrajectoryGoal
    obstacles: tuple
    hitl_mode: str
    max_ticks: Optional[int]
    goal_tolerance_m: float
    waypoint_tolerance_m: float
    sync_timeout_ms: float
    resend_interval_ms: float
    fingerprint: str
    raw: dict


_REQUIRED = object()


def _get(doc: dict, field: str, path: str, kind, default=_REQUIRED):
    if field not in doc:
        if default is _REQUIRED:
            raise ConfigError(f"{path}{field}", "required field missing")
        return default
    value = doc[field]
    try:
        if kind is float:
            out = float(value)
            if isinstance(value, bool):
                raise TypeError
            return out
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is dict:
            if not isinstance(value, dict):
                raise TypeError
            return value
        if kind is list:
            if not isinstance(value, list):
                raise TypeError
            return value
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"{path}{field}", f"expected {kind.__name__}, got {value!r}")


def _pose(doc: dict, path: str) -> Pose:
    try:
        return Pose(
            _get(doc, "x", path, float),
            _get(doc, "y", path, float),
            _get(doc, "z", path, float),
            _get(doc, "roll", path, float, 0.0),
            _get(doc, "pitch", path, float, 0.0),
            _get(doc, "yaw", path, float, 0.0),
        )
    except DomainError as exc:
        raise ConfigError(path.rstrip("."), str(exc)) from exc


def _robot(doc: dict, path: str, chain: KinematicChain) -> RobotConfig:
    try:
        return RobotConfig(
            chain=chain,
            gain=_get(doc, "gain", path, float),
            tick_ms=_get(doc, "tick_ms", path, float, 1.0),
            clock_offset_ms=_get(doc, "clock_offset_ms", path, float, 0.0),
            actuation_latency_ms=_get(doc, "actuation_latency_ms", path, float, 0.0),
        )
    except DomainError as exc:
        raise ConfigError(path.rstrip("."), str(exc)) from exc


def _channel(doc: dict, path: str, name: str, master_seed: int) -> ChannelConfig:
    default_seed = (master_seed * 1000003 + zlib.crc32(name.encode())) & 0x7FFFFFFF
    try:
        return ChannelConfig(
            latency_mean_ms=_get(doc, "latency_ms", path, float, 0.0),
            jitter_ms=_get(doc, "jitter_ms", path, float, 0.0),
            drop_prob=_get(doc, "drop_prob", path, float, 0.0),
            mode=_get(doc, "mode", path, str, "synchronous"),
            seed=_get(doc, "seed", path, int, default_seed),
        )
    except DomainError as exc:
        raise ConfigError(path.rstrip("."), str(exc)) from exc


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Validate and bind a raw config document into typed components."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "config document must be a JSON object")
    version = _get(doc, "v", "", int)
    if version != SCHEMA_VERSION:
        raise ConfigError("v", f"unsupported schema version {version}")
    name = _get(doc, "name", "", str, "scenario")
    seed = _get(doc, "seed", "", int)
    env_seed = os.environ.get("TWINSYNC_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError("TWINSYNC_SEED", f"not an integer: {env_seed!r}") from exc

    chain_spec = doc.get("chain", "panda7")
    try:
        chain = chain_from_config(chain_spec)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("chain", str(exc)) from exc

    if "initial_joints" in doc:
        joints_raw = _get(doc, "initial_joints", "", list)
        try:
            initial_joints = chain.validate_joints([float(v) for v in joints_raw])
        except (DomainError, ValueError, TypeError) as exc:
            raise ConfigError("initial_joints", str(exc)) from exc
        if not chain.within_limits(initial_joints):
            raise ConfigError("initial_joints", "outside joint limits")
    elif chain_spec == "panda7" or chain_spec is None:
        initial_joints = PANDA_HOME.copy()
    else:
        initial_joints = chain.joint_limits.mean(axis=1)

    physical = _robot(_get(doc, "physical", "", dict), "physical.", chain)
    virtual = _robot(_get(doc, "virtual", "", dict), "virtual.", chain)
    if physical.tick_ms != virtual.tick_ms:
        raise ConfigError("virtual.tick_ms", "must equal physical.tick_ms")

    channels_doc = _get(doc, "channels", "", dict, {})
    for key in channels_doc:
        if key not in CHANNEL_NAMES:
            raise ConfigError(f"channels.{key}", f"unknown channel, expected {CHANNEL_NAMES}")
    channels = {
        cname: _channel(channels_doc.get(cname, {}), f"channels.{cname}.", cname, seed)
        for cname in CHANNEL_NAMES
    }

    bounds_doc = _get(doc, "bounds", "", dict, {})
    try:
        bounds = Bounds(
            delta_q_m=_get(bounds_doc, "delta_q_m", "bounds.", float, 0.15),
            delta_alpha_ms=_get(bounds_doc, "delta_alpha_ms", "bounds.", float, 5.0),
            delta_b_m=_get(bounds_doc, "delta_b_m", "bounds.", float, 0.05),
        )
    except DomainError as exc:
        raise ConfigError("bounds", str(exc)) from exc

    goal_doc = _get(doc, "goal", "", dict)
    target = _pose(_get(goal_doc, "target", "goal.", dict), "goal.target.")
    try:
        goal = TrajectoryGoal(target, _get(goal_doc, "max_step_m", "goal.", float, 0.01))
    except DomainError as exc:
        raise ConfigError("goal.max_step_m", str(exc)) from exc

    obstacles = []
    for i, obs_doc in enumerate(_get(doc, "obstacles", "", list, [])):
        path = f"obstacles[{i}]."
        try:
            obstacles.append(
                Obstacle(
                    center_x=_get(obs_doc, "cx", path, float),
                    center_y=_get(obs_doc, "cy", path, float),
                    size_x=_get(obs_doc, "sx", path, float),
                    size_y=_get(obs_doc, "sy", path, float),
                    height=_get(obs_doc, "h", path, float),
                )
            )
        except DomainError as exc:
            raise ConfigError(path.rstrip("."), str(exc)) from exc

    hitl_mode = _get(doc, "hitl_mode", "", str, GATE_MODE)
    if hitl_mode not in (GATE_MODE, AUTO_MODE):
        raise ConfigError("hitl_mode", f"must be {GATE_MODE!r} or {AUTO_MODE!r}")

    max_ticks = _get(doc, "max_ticks", "", int, None)
    if max_ticks is not None and max_ticks <= 0:
        raise ConfigError("max_ticks", "must be positive")

    control_doc = _get(doc, "control", "", dict, {})
    goal_tol = _get(control_doc, "goal_tolerance_m", "control.", float, 1e-3)
    wp_tol = _get(control_doc, "waypoint_tolerance_m", "control.", float, 0.005)
    sync_timeout = _get(
        control_doc, "sync_timeout_ms", "control.", float, DEFAULT_SYNC_TIMEOUT_MS
    )
    resend = _get(control_doc, "resend_interval_ms", "control.", float, 50.0)
    for fname, val in (
        ("control.goal_tolerance_m", goal_tol),
        ("control.waypoint_tolerance_m", wp_tol),
        ("control.sync_timeout_ms", sync_timeout),
        ("control.resend_interval_ms", resend),
    ):
        if not (val > 0.0):
            raise ConfigError(fname, "must be positive")

    normalized = {
        "v": SCHEMA_VERSION,
        "name": name,
        "seed": seed,
        "chain": chain_spec if isinstance(chain_spec, str) else chain_spec,
        "initial_joints": [float(v) for v in initial_joints],
        "physical": {
            "gain": physical.gain,
            "tick_ms": physical.tick_ms,
            "clock_offset_ms": physical.clock_offset_ms,
            "actuation_latency_ms": physical.actuation_latency_ms,
        },
        "virtual": {
            "gain": virtual.gain,
            "tick_ms": virtual.tick_ms,
            "clock_offset_ms": virtual.clock_offset_ms,
            "actuation_latency_ms": virtual.actuation_latency_ms,
        },
        "channels": {
            cname: {
                "latency_ms": channels[cname].latency_mean_ms,
                "jitter_ms": channels[cname].jitter_ms,
                "drop_prob": channels[cname].drop_prob,
                "mode": channels[cname].mode,
                "seed": channels[cname].seed,
            }
            for cname in CHANNEL_NAMES
        },
        "bounds": {
            "delta_q_m": bounds.delta_q_m,
            "delta_alpha_ms": bounds.delta_alpha_ms,
            "delta_b_m": bounds.delta_b_m,
        },
        "goal": {
            "target": dict(zip(("x", "y", "z", "roll", "pitch", "yaw"), target.as_tuple())),
            "max_step_m": goal.max_step,
        },
        "obstacles": [
            {
                "cx": o.center_x,
                "cy": o.center_y,
                "sx": o.size_x,
                "sy": o.size_y,
                "h": o.height,
            }
            for o in obstacles
        ],
        "hitl_mode": hitl_mode,
        "max_ticks": max_ticks,
        "control": {
            "goal_tolerance_m": goal_tol,
            "waypoint_tolerance_m": wp_tol,
            "sync_timeout_ms": sync_timeout,
            "resend_interval_ms": resend,
        },
    }

    return ScenarioConfig(
        name=name,
        seed=seed,
        chain=chain,
        initial_joints=initial_joints,
        physical=physical,
        virtual=virtual,
        channels=channels,
        bounds=bounds,
        goal=goal,
        obstacles=tuple(obstacles),
        hitl_mode=hitl_mode,
        max_ticks=max_ticks,
        goal_tolerance_m=goal_tol,
        waypoint_tolerance_m=wp_tol,
        sync_timeout_ms=sync_timeout,
        resend_interval_ms=resend,
        fingerprint=config_fingerprint(normalized),
        raw=normalized,
    )


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(doc)
