"""Simulated robot twin: first-order joint tracking plus a local clock.

One RobotTwin stands in for either side of the pair (the physical arm or
its virtual replica); the two differ only by config (controller gain, clock
offset, actuation latency). The plant is a per-joint first-order lag:
q += gain * dt * (target - q), which keeps tracking bounded and lets a gain
mismatch between the twins produce the transient deviations the monitor
watches for. Deterministic: identical config + command trace gives a
bit-identical state trace.
"""

from dataclasses import dataclass

import numpy as np

from twinsync.errors import DomainError, RejectedCommandError
from twinsync.kinematics import KinematicChain, Pose, forward_kinematics

__all__ = ["PHYSICAL", "VIRTUAL", "RobotConfig", "TwinState", "CommandMsg", "RobotTwin"]

PHYSICAL = "physical"
VIRTUAL = "virtual"


@dataclass(frozen=True)
class RobotConfig:
    """Plant parameters for one twin."""

    chain: KinematicChain
    gain: float  # tracking gain, 1/s
    tick_ms: float = 1.0
    clock_offset_ms: float = 0.0
    actuation_latency_ms: float = 0.0

    def __post_init__(self):
        if not (self.gain > 0.0):
            raise DomainError("gain must be positive")
        if not (self.tick_ms > 0.0):
            raise DomainError("tick_ms must be positive")
        if self.actuation_latency_ms < 0.0:
            raise DomainError("actuation_latency_ms must be >= 0")


@dataclass(frozen=True)
class TwinState:
    """One twin's snapshot: end pose, joints, local timestamp.

    applied_sequence is the last command the plant has acted on; the
    synchronous link mode uses it as its acknowledgment correlator.
    """

    twin_id: str
    pose: Pose
    joints: np.ndarray
    timestamp_ms: float
    applied_sequence: int


@dataclass(frozen=True)
class CommandMsg:
    """Joint-space target command; sequences increase per sender."""

    target_joints: np.ndarray
    issue_time_ms: float
    sequence: int


class RobotTwin:
    """Discrete-time plant owned by a single stepping context."""

    def __init__(self, config: RobotConfig, twin_id: str, initial_joints):
        self.config = config
        self.twin_id = twin_id
        self._q = config.chain.validate_joints(initial_joints).copy()
        self._target = self._q.copy()
        self._elapsed_ms = 0.0
        self._pending = None  # (effective_ms, target, sequence)
        self._last_sequence = -1
        self._applied_sequence = -1
        self.applied_events: list = []  # (sequence, elapsed_ms at activation)
        self.rejected_events: list = []  # (sequence, elapsed_ms)

    @property
    def joints(self) -> np.ndarray:
        return self._q.copy()

    def apply_command(self, cmd: CommandMsg, now_ms: float) -> None:
        """Queue cmd to take effect at now + actuation latency.

        A newer sequence supersedes an older queued one; stale sequences are
        ignored. Targets outside joint limits are recorded and rejected (the
        plant holds its current target).
        """
        if cmd.sequence <= self._last_sequence:
            return
        self._last_sequence = cmd.sequence
        target = self.config.chain.validate_joints(cmd.target_joints)
        if not self.config.chain.within_limits(target):
            self.rejected_events.append((cmd.sequence, self._elapsed_ms))
            raise RejectedCommandError(
                f"command {cmd.sequence} target outside joint limits"
            )
        effective = now_ms + self.config.actuation_latency_ms
        if effective <= self._elapsed_ms:
            self._activate(target.copy(), cmd.sequence)
        else:
            self._pending = (effective, target.copy(), cmd.sequence)

    def _activate(self, target: np.ndarray, sequence: int) -> None:
        self._target = target
        self._applied_sequence = sequence
        self.applied_events.append((sequence, self._elapsed_ms))

    def step(self, dt_ms: float) -> None:
        """Advance one tick: activate due commands, first-order lag, clock."""
        if dt_ms != self.config.tick_ms:
            raise DomainError(
                f"step dt {dt_ms} must equal configured tick {self.config.tick_ms}"
            )
        if self._pending is not None and self._pending[0] <= self._elapsed_ms:
            _, target, sequence = self._pending
            self._pending = None
            self._activate(target, sequence)
        factor = self.config.gain * (dt_ms / 1000.0)
        self._q = self._q + factor * (self._target - self._q)
        self._elapsed_ms += dt_ms

    def hold(self) -> None:
        """Safety hold: freeze at the current joint state, cancel pending."""
        self._target = self._q.copy()
        self._pending = None

    def snapshot(self) -> TwinState:
        """Immutable state report; pose recomputed from the joints."""
        joints = self._q.copy()
        joints.setflags(write=False)
        return TwinState(
            twin_id=self.twin_id,
            pose=forward_kinematics(self.config.chain, self._q),
            joints=joints,
            timestamp_ms=self._elapsed_ms + self.config.clock_offset_ms,
            applied_sequence=self._applied_sequence,
        )
