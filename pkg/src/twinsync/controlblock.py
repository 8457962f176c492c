"""Central control loop: plan, command both twins, monitor, record.

Every tick the loop acquires the latest (possibly transport-delayed) state
report from each twin, runs the three bound checks, and appends one row to
the run log. Pose and timestamp deviations alert and record; obstacle
proximity additionally engages the human-in-the-loop gate; a synchronous
link that misses its acknowledgment deadline blocks the run.

Bound semantics: pose deviation is the Euclidean distance between reported
end positions, timestamp deviation the absolute clock difference, both
alerting inclusively (measured >= bound fires). The obstacle check is a
proximity trigger: it fires when the smaller of the two twins' clearances
drops to or below the bound, because the response to it is an avoidance
replan, not a celebration of distance.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from twinsync.errors import (
    DomainError,
    RejectedCommandError,
    UndefinedMetricError,
)
from twinsync.hitl import (
    APPROVED,
    AWAITING_DECISION,
    AWAITING_REHEARSAL,
    HitlGate,
    RehearsalConfig,
)
from twinsync.kinematics import Pose, forward_kinematics, solve_ik, wrap_angle
from twinsync.robotsim import PHYSICAL, VIRTUAL, CommandMsg, RobotTwin
from twinsync.trajectory import clearance, plan_waypoints
from twinsync.twinlink import MODE_ASYNC, MODE_SYNC, Channel, LinkPair

__all__ = [
    "INCIDENT_POSE",
    "INCIDENT_TIMING",
    "INCIDENT_OBSTACLE",
    "INCIDENT_TIMEOUT",
    "KIND_ORDER",
    "TERMINAL_COMPLETED",
    "TERMINAL_BLOCKED",
    "TERMINAL_WATCHDOG",
    "GATE_MODE",
    "AUTO_MODE",
    "CSV_COLUMNS",
    "Bounds",
    "Incident",
    "LogRow",
    "Event",
    "RunLog",
    "check_pose_deviation",
    "check_timing",
    "check_obstacle",
    "mae",
    "actuation_delta",
    "MetricsReport",
    "metrics_report",
    "ScenarioEngine",
    "run_scenario",
]

INCIDENT_POSE = "pose-deviation"
INCIDENT_TIMING = "timing-deviation"
INCIDENT_OBSTACLE = "obstacle-proximity"
INCIDENT_TIMEOUT = "link-timeout"
KIND_ORDER = (INCIDENT_POSE, INCIDENT_TIMING, INCIDENT_OBSTACLE, INCIDENT_TIMEOUT)

TERMINAL_COMPLETED = "completed"
TERMINAL_BLOCKED = "blocked"
TERMINAL_WATCHDOG = "watchdog-timeout"

GATE_MODE = "gate"
AUTO_MODE = "auto-approve"

CSV_COLUMNS = (
    "tick",
    "ts_r_ms",
    "ts_v_ms",
    "pr_x",
    "pr_y",
    "pr_z",
    "pr_roll",
    "pr_pitch",
    "pr_yaw",
    "pv_x",
    "pv_y",
    "pv_z",
    "pv_roll",
    "pv_pitch",
    "pv_yaw",
    "dev_pos_m",
    "dev_ts_ms",
    "clearance_min_m",
    "incident_kind",
)

TRANSLATIONAL_AXES = ("x", "y", "z")
ROTATIONAL_AXES = ("roll", "pitch", "yaw")
AXES = TRANSLATIONAL_AXES + ROTATIONAL_AXES

# Motion-onset detection threshold: any bitwise position change counts, so
# exact float equality of consecutive rows marks a stationary plant.
_IK_TOL_M = 1e-5
_IK_MAX_ITER = 150


@dataclass(frozen=True)
class Bounds:
    """Safety thresholds: pose (m), timestamp (ms), obstacle clearance (m)."""

    delta_q_m: float
    delta_alpha_ms: float
    delta_b_m: float

    def __post_init__(self):
        for name in ("delta_q_m", "delta_alpha_ms", "delta_b_m"):
            if not (getattr(self, name) > 0.0):
                raise DomainError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Incident:
    kind: str
    measured: float
    bound: float
    unit: str
    tick: int = -1
    twin_states: Optional[tuple] = None


@dataclass(frozen=True)
class LogRow:
    tick: int
    ts_r_ms: float
    ts_v_ms: float
    pr: Pose
    pv: Pose
    dev_pos_m: float
    dev_ts_ms: float
    clearance_min_m: Optional[float]
    incident_kinds: tuple


@dataclass(frozen=True)
class Event:
    """Ordered audit record (command sends/applies, gate transitions)."""

    kind: str
    tick: int
    detail: dict


@dataclass
class RunLog:
    """Per-tick trace plus incident and audit-event streams."""

    tick_ms: float
    rows: list = field(default_factory=list)
    incidents: list = field(default_factory=list)
    events: list = field(default_factory=list)
    config_fingerprint: Optional[str] = None
    terminal_state: Optional[str] = None

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv_file(fh)

    def write_csv_file(self, fh) -> None:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            fh.write(_row_to_csv(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunLog":
        with open(path, "r", newline="") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].split(",") != list(CSV_COLUMNS):
            raise DomainError("malformed CSV: missing or wrong header row")
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise DomainError(f"malformed CSV: line {lineno} has {len(parts)} fields")
            try:
                rows.append(_row_from_csv(parts))
            except (ValueError, DomainError) as exc:
                raise DomainError(f"malformed CSV: line {lineno}: {exc}") from exc
        tick_ms = rows[1].ts_r_ms - rows[0].ts_r_ms if len(rows) >= 2 else 1.0
        return cls(tick_ms=tick_ms, rows=rows)


def _fmt(value: float) -> str:
    return repr(float(value))


def _row_to_csv(row: LogRow) -> str:
    fields = [str(row.tick), _fmt(row.ts_r_ms), _fmt(row.ts_v_ms)]
    fields += [_fmt(v) for v in row.pr.as_tuple()]
    fields += [_fmt(v) for v in row.pv.as_tuple()]
    fields += [_fmt(row.dev_pos_m), _fmt(row.dev_ts_ms)]
    fields.append("" if row.clearance_min_m is None else _fmt(row.clearance_min_m))
    fields.append("|".join(row.incident_kinds))
    return ",".join(fields)


def _row_from_csv(parts) -> LogRow:
    pr = Pose(*(float(v) for v in parts[3:9]))
    pv = Pose(*(float(v) for v in parts[9:15]))
    kinds = tuple(parts[18].split("|")) if parts[18] else ()
    return LogRow(
        tick=int(parts[0]),
        ts_r_ms=float(parts[1]),
        ts_v_ms=float(parts[2]),
        pr=pr,
        pv=pv,
        dev_pos_m=float(parts[15]),
        dev_ts_ms=float(parts[16]),
        clearance_min_m=None if parts[17] == "" else float(parts[17]),
        incident_kinds=kinds,
    )


# --------------------------------------------------------------------------
# Bound checks
# --------------------------------------------------------------------------

def check_pose_deviation(pr: Pose, pv: Pose, delta_q_m: float) -> Optional[Incident]:
    """Incident iff the end positions differ by >= delta_q (inclusive)."""
    measured = pr.distance_to(pv)
    if measured >= delta_q_m:
        return Incident(INCIDENT_POSE, measured, delta_q_m, "m")
    return None


def check_timing(ts_r_ms: float, ts_v_ms: float, delta_alpha_ms: float) -> Optional[Incident]:
    """Incident iff the twin timestamps differ by >= delta_alpha (inclusive)."""
    measured = abs(ts_r_ms - ts_v_ms)
    if measured >= delta_alpha_ms:
        return Incident(INCIDENT_TIMING, measured, delta_alpha_ms, "ms")
    return None


def check_obstacle(pr: Pose, pv: Pose, obs, delta_b_m: float) -> Optional[Incident]:
    """Proximity trigger: fires when either twin is within delta_b of the box."""
    measured = min(clearance(pr, obs), clearance(pv, obs))
    if measured <= delta_b_m:
        return Incident(INCIDENT_OBSTACLE, measured, delta_b_m, "m")
    return None


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def mae(log: RunLog, axis: str) -> float:
    """Mean absolute twin error on one pose axis over all logged ticks.

    Rotational axes difference is wrapped to (-pi, pi] before taking the
    absolute value.
    """
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
    if not log.rows:
        raise UndefinedMetricError("mae undefined on an empty log")
    rotational = axis in ROTATIONAL_AXES
    total = 0.0
    for row in log.rows:
        diff = getattr(row.pr, axis) - getattr(row.pv, axis)
        if rotational:
            diff = wrap_angle(diff)
        total += abs(diff)
    return total / len(log.rows)


def _onset_ticks(log: RunLog, twin: str) -> list:
    """Ticks where a twin transitions stationary -> moving (bitwise position)."""
    attr = "pr" if twin == PHYSICAL else "pv"
    onsets = []
    was_moving = False
    prev = None
    for row in log.rows:
        pos = getattr(row, attr)
        if prev is not None:
            moving = (pos.x, pos.y, pos.z) != (prev.x, prev.y, prev.z)
            if moving and not was_moving:
                onsets.append(row.tick)
            was_moving = moving
        prev = pos
    return onsets


def actuation_delta(log: RunLog) -> float:
    """Mean |onset difference| between the twins' motion starts, in ms.

    Onsets are recovered from the log alone: the k-th stationary-to-moving
    transition of each twin is paired with the other's k-th.
    """
    onsets_r = _onset_ticks(log, PHYSICAL)
    onsets_v = _onset_ticks(log, VIRTUAL)
    if not onsets_r or not onsets_v:
        raise UndefinedMetricError("actuation_delta undefined: no motion onset in log")
    pairs = list(zip(onsets_r, onsets_v))
    total = sum(abs(tr - tv) for tr, tv in pairs)
    return (total / len(pairs)) * log.tick_ms


@dataclass(frozen=True)
class MetricsReport:
    """Everything derived from one run log; a pure function of the rows."""

    mae_x: float
    mae_y: float
    mae_z: float
    mae_roll: float
    mae_pitch: float
    mae_yaw: float
    actuation_delta_ms: Optional[float]
    incident_counts: dict
    min_clearance_m: Optional[float]
    terminal_state: Optional[str]
    config_fingerprint: Optional[str]

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "mae": {
                "x": self.mae_x,
                "y": self.mae_y,
                "z": self.mae_z,
                "roll": self.mae_roll,
                "pitch": self.mae_pitch,
                "yaw": self.mae_yaw,
            },
            "actuation_delta_ms": self.actuation_delta_ms,
            "incident_counts": dict(self.incident_counts),
            "min_clearance_m": self.min_clearance_m,
            "terminal_state": self.terminal_state,
            "config_fingerprint": self.config_fingerprint,
        }

    def numeric_fields(self) -> dict:
        """The bit-comparable subset (everything except terminal/fingerprint)."""
        d = self.to_dict()
        d.pop("terminal_state")
        d.pop("config_fingerprint")
        return d


def metrics_report(log: RunLog) -> MetricsReport:
    """Compute the full report from a log (in-memory or CSV-parsed)."""
    if not log.rows:
        raise UndefinedMetricError("metrics undefined on an empty log")
    try:
        act = actuation_delta(log)
    except UndefinedMetricError:
        act = None
    counts = {kind: 0 for kind in KIND_ORDER}
    for row in log.rows:
        for kind in row.incident_kinds:
            counts[kind] += 1
    clearances = [row.clearance_min_m for row in log.rows if row.clearance_min_m is not None]
    return MetricsReport(
        mae_x=mae(log, "x"),
        mae_y=mae(log, "y"),
        mae_z=mae(log, "z"),
        mae_roll=mae(log, "roll"),
        mae_pitch=mae(log, "pitch"),
        mae_yaw=mae(log, "yaw"),
        actuation_delta_ms=act,
        incident_counts=counts,
        min_clearance_m=min(clearances) if clearances else None,
        terminal_state=log.terminal_state,
        config_fingerprint=log.config_fingerprint,
    )


def config_fingerprint(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# --------------------------------------------------------------------------
# Scenario engine
# --------------------------------------------------------------------------

class ScenarioEngine:
    """Drives one scenario tick by tick; single logical thread.

    Listeners (on_row, on_pending, on_terminal) let a service observe
    immutable snapshots without touching the loop. In interactive mode a
    blocked run freezes simulated time and waits for a gate decision from
    another thread; otherwise gate mode terminates blocked and auto mode
    decides inline.
    """

    def __init__(self, config, interactive: bool = False, stop_event=None):
        import threading

        self.cfg = config
        self.chain = config.chain
        self.tick_ms = config.physical.tick_ms
        if config.virtual.tick_ms != self.tick_ms:
            raise DomainError("both twins must share one tick")
        self.robots = {
            PHYSICAL: RobotTwin(config.physical, PHYSICAL, config.initial_joints),
            VIRTUAL: RobotTwin(config.virtual, VIRTUAL, config.initial_joints),
        }
        self.links = {
            PHYSICAL: LinkPair(
                Channel(config.channels["cmd_physical"], "cmd_physical"),
                Channel(config.channels["state_physical"], "state_physical"),
            ),
            VIRTUAL: LinkPair(
                Channel(config.channels["cmd_virtual"], "cmd_virtual"),
                Channel(config.channels["state_virtual"], "state_virtual"),
            ),
        }
        start = forward_kinematics(self.chain, config.initial_joints)
        self.plan = plan_waypoints(start, config.goal)
        self.bounds = config.bounds
        self.gate = HitlGate()
        self.interactive = interactive
        self.stop_event = stop_event or threading.Event()
        self.latest = {
            PHYSICAL: self.robots[PHYSICAL].snapshot(),
            VIRTUAL: self.robots[VIRTUAL].snapshot(),
        }
        self.log = RunLog(tick_ms=self.tick_ms, config_fingerprint=config.fingerprint)
        self.tick_count = 0
        self.wp_index = 0
        self.seq = 0
        self.cmd_joints = self.chain.validate_joints(config.initial_joints)
        self.awaiting = {}
        self.blocked = False
        self.pending_active = None
        self.handled_obstacles = set()
        self.last_send_ms = None
        self.force_send = False
        self.terminal = None
        self.max_ticks = config.max_ticks or self._derived_watchdog()
        self.on_row = None
        self.on_pending = None
        self.on_terminal = None

    def _derived_watchdog(self) -> int:
        """10x the nominal plan duration under the slower twin's gain."""
        min_gain = min(self.cfg.physical.gain, self.cfg.virtual.gain)
        settle_ratio = max(
            2.0, self.cfg.goal.max_step / self.cfg.waypoint_tolerance_m
        )
        per_wp_ms = 1000.0 * math.log(settle_ratio) / min_gain + 2.0 * self.tick_ms
        latency_ms = sum(c.latency_mean_ms for c in self.cfg.channels.values())
        act_ms = self.cfg.physical.actuation_latency_ms + self.cfg.virtual.actuation_latency_ms
        nominal_ms = len(self.plan) * per_wp_ms + 1000.0 * 5.0 / min_gain + latency_ms + act_ms
        return int(math.ceil(10.0 * nominal_ms / self.tick_ms))

    # -- helpers -----------------------------------------------------------

    def _event(self, kind: str, **detail) -> None:
        self.log.events.append(Event(kind, self.tick_count, detail))

    def _emit_pending(self, pending) -> None:
        if self.on_pending is not None:
            self.on_pending(pending)

    def _rehearsal_config(self) -> RehearsalConfig:
        return RehearsalConfig(
            robot=self.cfg.virtual,
            initial_joints=self.cfg.initial_joints,
            obstacles=self.cfg.obstacles,
            delta_b_m=self.bounds.delta_b_m,
            delta_q_m=self.bounds.delta_q_m,
            goal_tolerance_m=self.cfg.goal_tolerance_m,
            waypoint_tolerance_m=self.cfg.waypoint_tolerance_m,
            max_ticks=self.max_ticks,
            ik_tol_m=_IK_TOL_M,
            ik_max_iter=_IK_MAX_ITER,
        )

    def _send_waypoint(self, now_ms: float) -> None:
        wp = self.plan.waypoints[self.wp_index]
        joints = solve_ik(
            self.chain, wp, self.cmd_joints, tol=_IK_TOL_M, max_iter=_IK_MAX_ITER
        )
        self.cmd_joints = joints
        self.seq += 1
        for twin_id in (PHYSICAL, VIRTUAL):
            link = self.links[twin_id]
            link.command.send(CommandMsg(joints, now_ms, self.seq), now_ms)
            self._event(
                "command-sent", twin=twin_id, sequence=self.seq, waypoint=self.wp_index
            )
            if link.command.config.mode == MODE_SYNC:
                self.awaiting[twin_id] = (self.seq, now_ms)
        self.last_send_ms = now_ms

    def _engage_gate(self, incident: Incident, obstacle, obstacle_index) -> None:
        self.blocked = True
        for twin_id in (PHYSICAL, VIRTUAL):
            purged = self.links[twin_id].command.purge()
            if purged:
                self._event("channel-purged", twin=twin_id, count=purged)
        self.awaiting.clear()
        pending = self.gate.raise_anomaly(
            incident,
            self.plan,
            obstacle,
            self.bounds.delta_b_m,
            self.tick_count,
            obstacle_index,
        )
        self.pending_active = pending
        self._event(
            "pending-raised", plan_id=pending.id, incident=incident.kind,
            candidate="empty" if pending.candidate is None else "replanned",
        )
        self._emit_pending(pending)
        if pending.status == AWAITING_REHEARSAL:
            report = self.gate.rehearse(pending, self._rehearsal_config())
            self._event(
                "rehearsal-done", plan_id=pending.id, completed=report.completed
            )
            self._emit_pending(pending)

    def _deploy(self, pending, now_ms: float) -> None:
        if pending.candidate is not None:
            self.plan = pending.candidate
            pos = self.latest[PHYSICAL].pose
            dists = [pos.distance_to(wp) for wp in self.plan.waypoints]
            self.wp_index = dists.index(min(dists))
        self.gate.mark_deployed(pending.id, self.tick_count)
        if pending.obstacle_index is not None:
            self.handled_obstacles.add(pending.obstacle_index)
        self._event(
            "plan-deployed", plan_id=pending.id, resume_waypoint=self.wp_index
        )
        self._emit_pending(pending)
        self.blocked = False
        self.pending_active = None
        self.last_send_ms = None
        self.force_send = True

    def _resolve_blocked(self, now_ms: float) -> bool:
        """Returns True when the run may resume; False leaves it blocked."""
        pending = self.pending_active
        if self.cfg.hitl_mode == AUTO_MODE:
            if pending.status == AWAITING_DECISION:
                verdict = "approve" if pending.candidate is not None else "reject"
                decided = self.gate.decide(pending.id, verdict, "auto-approver", now_ms)
                self._event(
                    "decision", plan_id=pending.id, verdict=verdict,
                    actor="auto-approver", override=decided.decision.override,
                )
                self._emit_pending(pending)
            if pending.status == APPROVED:
                self._deploy(pending, now_ms)
                return True
            return False
        if not self.interactive:
            return False
        # Serve mode: simulated time freezes while a human decides.
        while not self.stop_event.is_set():
            if pending.status == APPROVED:
                self._event(
                    "decision", plan_id=pending.id,
                    verdict=pending.decision.verdict, actor=pending.decision.actor,
                    override=pending.decision.override,
                )
                self._deploy(pending, now_ms)
                return True
            self.stop_event.wait(0.01)
        return False

    # -- main loop ---------------------------------------------------------

    def _tick(self) -> None:
        now = self.tick_count * self.tick_ms

        # Upstream state reports, then deliveries due this tick.
        for twin_id, robot in self.robots.items():
            self.links[twin_id].state.send(robot.snapshot(), now)
        for twin_id in (PHYSICAL, VIRTUAL):
            for state in self.links[twin_id].state.deliver_due(now):
                self.latest[twin_id] = state
                waiting = self.awaiting.get(twin_id)
                if waiting is not None and state.applied_sequence >= waiting[0]:
                    del self.awaiting[twin_id]

        # Monitor on the latest known pair.
        state_r = self.latest[PHYSICAL]
        state_v = self.latest[VIRTUAL]
        pr, pv = state_r.pose, state_v.pose
        kinds = []
        incidents_now = []

        inc = check_pose_deviation(pr, pv, self.bounds.delta_q_m)
        if inc is not None:
            incidents_now.append(inc)
        inc = check_timing(state_r.timestamp_ms, state_v.timestamp_ms, self.bounds.delta_alpha_ms)
        if inc is not None:
            incidents_now.append(inc)

        clearance_min = None
        trigger_obstacle = None
        trigger_index = None
        if self.cfg.obstacles:
            per_obs = [
                min(clearance(pr, obs), clearance(pv, obs)) for obs in self.cfg.obstacles
            ]
            clearance_min = min(per_obs)
            if clearance_min <= self.bounds.delta_b_m:
                incidents_now.append(
                    Incident(INCIDENT_OBSTACLE, clearance_min, self.bounds.delta_b_m, "m")
                )
                for idx, value in enumerate(per_obs):
                    if value <= self.bounds.delta_b_m and idx not in self.handled_obstacles:
                        trigger_obstacle = self.cfg.obstacles[idx]
                        trigger_index = idx
                        break

        timeout_incident = None
        if not self.blocked:
            for twin_id, (seq, sent_ms) in list(self.awaiting.items()):
                waited = now - sent_ms
                if waited >= self.cfg.sync_timeout_ms:
                    timeout_incident = Incident(
                        INCIDENT_TIMEOUT, waited, self.cfg.sync_timeout_ms, "ms"
                    )
                    incidents_now.append(timeout_incident)
                    break

        finalized = [
            replace(inc, tick=self.tick_count, twin_states=(state_r, state_v))
            for inc in incidents_now
        ]
        self.log.incidents.extend(finalized)
        kinds = tuple(k for k in KIND_ORDER if any(i.kind == k for i in finalized))

        row = LogRow(
            tick=self.tick_count,
            ts_r_ms=state_r.timestamp_ms,
            ts_v_ms=state_v.timestamp_ms,
            pr=pr,
            pv=pv,
            dev_pos_m=pr.distance_to(pv),
            dev_ts_ms=abs(state_r.timestamp_ms - state_v.timestamp_ms),
            clearance_min_m=clearance_min,
            incident_kinds=kinds,
        )
        self.log.rows.append(row)
        if self.on_row is not None:
            self.on_row(row)

        # Gate policy: obstacle proximity and link timeouts block.
        if not self.blocked and (trigger_obstacle is not None or timeout_incident is not None):
            if trigger_obstacle is not None:
                blocking = next(i for i in finalized if i.kind == INCIDENT_OBSTACLE)
                self._engage_gate(blocking, trigger_obstacle, trigger_index)
            else:
                blocking = next(i for i in finalized if i.kind == INCIDENT_TIMEOUT)
                self._engage_gate(blocking, None, None)

        if self.blocked:
            if not self._resolve_blocked(now):
                self.terminal = TERMINAL_BLOCKED
                return

        goal = self.plan.waypoints[-1]
        if (
            pr.distance_to(goal) <= self.cfg.goal_tolerance_m
            and pv.distance_to(goal) <= self.cfg.goal_tolerance_m
        ):
            self.terminal = TERMINAL_COMPLETED
            return
        if self.tick_count >= self.max_ticks:
            self.terminal = TERMINAL_WATCHDOG
            return

        # Command dispatch: arrival-gated advancement, ack-gated in sync mode.
        if not self.awaiting:
            if self.force_send:
                self.force_send = False
                self._send_waypoint(now)
            elif (
                self.wp_index < len(self.plan.waypoints) - 1
                and pr.distance_to(self.plan.waypoints[self.wp_index])
                <= self.cfg.waypoint_tolerance_m
                and pv.distance_to(self.plan.waypoints[self.wp_index])
                <= self.cfg.waypoint_tolerance_m
            ):
                self.wp_index += 1
                self._send_waypoint(now)
            elif (
                self.last_send_ms is not None
                and now - self.last_send_ms >= self.cfg.resend_interval_ms
                and any(
                    self.links[t].command.config.mode == MODE_ASYNC
                    for t in (PHYSICAL, VIRTUAL)
                )
            ):
                # Async links have no ack; re-issue the current waypoint so a
                # dropped command cannot stall the run.
                self._send_waypoint(now)

        # Downstream deliveries, then one plant step each.
        for twin_id, robot in self.robots.items():
            for cmd in self.links[twin_id].command.deliver_due(now):
                applied_before = len(robot.applied_events)
                try:
                    robot.apply_command(cmd, now)
                except RejectedCommandError:
                    self._event("command-rejected", twin=twin_id, sequence=cmd.sequence)
                for seq, _ in robot.applied_events[applied_before:]:
                    self._event("command-applied", twin=twin_id, sequence=seq)
            applied_before = len(robot.applied_events)
            robot.step(self.tick_ms)
            for seq, _ in robot.applied_events[applied_before:]:
                self._event("command-applied", twin=twin_id, sequence=seq)

        self.tick_count += 1

    def run(self, pacer=None) -> RunLog:
        """Drive to a terminal state; pacer(tick) may sleep for wall-clock pacing."""
        while self.terminal is None:
            self._tick()
            if pacer is not None and self.terminal is None:
                pacer(self.tick_count)
        self.log.terminal_state = self.terminal
        if self.on_terminal is not None:
            self.on_terminal(self.terminal)
        return self.log


def run_scenario(config, interactive: bool = False, stop_event=None) -> RunLog:
    """Execute one scenario to its terminal state; pure function of config."""
    return ScenarioEngine(config, interactive=interactive, stop_event=stop_event).run()
