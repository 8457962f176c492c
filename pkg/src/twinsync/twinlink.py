"""Simulated duplex link between the control block and one twin.

Each direction is a Channel with configurable mean latency, uniform jitter,
and drop probability, driven by its own seeded generator so scenarios
replay exactly. Due times are monotonized per channel, which preserves
FIFO delivery even under jitter. The synchronous mode's blocking primitive
(sync_round_trip) advances simulated time until the command's
acknowledging state report returns.
"""

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from twinsync.errors import DomainError, LinkTimeoutError

__all__ = [
    "MODE_SYNC",
    "MODE_ASYNC",
    "ChannelConfig",
    "InFlightMsg",
    "Channel",
    "LinkPair",
    "sync_round_trip",
    "DEFAULT_SYNC_TIMEOUT_MS",
]

MODE_SYNC = "synchronous"
MODE_ASYNC = "asynchronous"

# The blocking mode needs some deadline; 250 ms is far beyond any configured
# latency in the bundled scenarios.
DEFAULT_SYNC_TIMEOUT_MS = 250.0


@dataclass(frozen=True)
class ChannelConfig:
    latency_mean_ms: float = 0.0
    jitter_ms: float = 0.0
    drop_prob: float = 0.0
    mode: str = MODE_SYNC
    seed: int = 0

    def __post_init__(self):
        if self.latency_mean_ms < 0.0:
            raise DomainError("latency_mean_ms must be >= 0")
        if not (0.0 <= self.drop_prob <= 1.0):
            raise DomainError("drop_prob must be in [0, 1]")
        if not (0.0 <= self.jitter_ms <= self.latency_mean_ms):
            raise DomainError("jitter_ms must be in [0, latency_mean_ms]")
        if self.mode not in (MODE_SYNC, MODE_ASYNC):
            raise DomainError(f"mode must be {MODE_SYNC!r} or {MODE_ASYNC!r}")


@dataclass
class InFlightMsg:
    payload: object
    send_time_ms: float
    due_time_ms: float
    dropped: bool = False


class Channel:
    """One direction of the link; mutated only by the scenario scheduler."""

    def __init__(self, config: ChannelConfig, name: str = "channel"):
        self.config = config
        self.name = name
        self._rng = random.Random(config.seed)
        self._queue: deque = deque()
        self._last_send_ms = -float("inf")
        self._last_due_ms = -float("inf")
        self.sent_count = 0
        self.dropped_count = 0
        self.delivered_count = 0
        self.purged_count = 0

    def send(self, payload, now_ms: float) -> None:
        """Enqueue payload; draws (jitter, drop) from the seeded generator.

        Both draws happen on every send, even when jitter or drop is zero,
        so the random stream is stable across config tweaks.
        """
        if now_ms < self._last_send_ms:
            raise DomainError("send times must be non-decreasing per channel")
        self._last_send_ms = now_ms
        jitter = self._rng.uniform(-self.config.jitter_ms, self.config.jitter_ms)
        drop_draw = self._rng.random()
        due = now_ms + self.config.latency_mean_ms + jitter
        if due < self._last_due_ms:  # FIFO: later sends never overtake
            due = self._last_due_ms
        self._last_due_ms = due
        msg = InFlightMsg(payload, now_ms, due, dropped=drop_draw < self.config.drop_prob)
        self.sent_count += 1
        if msg.dropped:
            self.dropped_count += 1
        self._queue.append(msg)

    def deliver_due(self, now_ms: float) -> list:
        """Pop and return all non-dropped payloads due by now, in due order."""
        out = []
        while self._queue and self._queue[0].due_time_ms <= now_ms:
            msg = self._queue.popleft()
            if not msg.dropped:
                self.delivered_count += 1
                out.append(msg.payload)
        return out

    def purge(self) -> int:
        """Safety flush: discard everything still in flight."""
        n = len(self._queue)
        self._queue.clear()
        self.purged_count += n
        return n

    @property
    def pending_count(self) -> int:
        return len(self._queue)


@dataclass
class LinkPair:
    """Downstream command channel + upstream state channel for one twin."""

    command: Channel
    state: Channel


def sync_round_trip(
    pair: LinkPair,
    cmd,
    now_ms: float,
    endpoint,
    tick_ms: float = 1.0,
    timeout_ms: float = DEFAULT_SYNC_TIMEOUT_MS,
) -> tuple:
    """Send cmd and block, advancing simulated time, until acknowledged.

    The endpoint (a RobotTwin) is stepped tick by tick; every tick it emits
    a state report into the upstream channel. The first report whose
    applied_sequence covers the command is the acknowledgment. Returns
    (state, now_ms). Raises LinkTimeoutError when no acknowledgment arrives
    within timeout_ms.
    """
    if pair.command.config.mode != MODE_SYNC:
        raise DomainError("sync_round_trip requires a synchronous command channel")
    pair.command.send(cmd, now_ms)
    deadline = now_ms + timeout_ms
    while True:
        for msg in pair.command.deliver_due(now_ms):
            endpoint.apply_command(msg, now_ms)
        pair.state.send(endpoint.snapshot(), now_ms)
        for state in pair.state.deliver_due(now_ms):
            if state.applied_sequence >= cmd.sequence:
                return state, now_ms
        if now_ms >= deadline:
            raise LinkTimeoutError(
                f"no acknowledgment for command {cmd.sequence} within {timeout_ms} ms"
            )
        endpoint.step(tick_ms)
        now_ms += tick_ms
