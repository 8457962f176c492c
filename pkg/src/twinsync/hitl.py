"""Human-in-the-loop safety gate.

On a blocking anomaly the engine freezes the physical twin's command
stream, builds a candidate recovery plan, rehearses it on a fresh virtual
twin, and waits for an explicit decision before anything is deployed back
to the physical side. Approvals over a failed rehearsal are allowed but
flagged as overrides; recording beats forbidding.

Status flow: awaiting-rehearsal -> awaiting-decision -> approved ->
deployed, or awaiting-decision -> rejected. No skips, no reversals.
"""

import math
from dataclasses import dataclass, field
from threading import RLock
from typing import Optional

from twinsync.errors import (
    DecisionConflictError,
    PlanNotFoundError,
    ReplanInfeasibleError,
    StateTransitionError,
    UndefinedRehearsalError,
)
from twinsync.robotsim import VIRTUAL, CommandMsg, RobotConfig, RobotTwin
from twinsync.trajectory import Obstacle, WaypointPlan, clearance, min_clearance, replan_avoid

__all__ = [
    "AWAITING_REHEARSAL",
    "AWAITING_DECISION",
    "APPROVED",
    "REJECTED",
    "DEPLOYED",
    "RehearsalConfig",
    "RehearsalReport",
    "Decision",
    "PendingPlan",
    "HitlGate",
]

AWAITING_REHEARSAL = "awaiting-rehearsal"
AWAITING_DECISION = "awaiting-decision"
APPROVED = "approved"
REJECTED = "rejected"
DEPLOYED = "deployed"

_NEXT = {
    AWAITING_REHEARSAL: (AWAITING_DECISION,),
    AWAITING_DECISION: (APPROVED, REJECTED),
    APPROVED: (DEPLOYED,),
    REJECTED: (),
    DEPLOYED: (),
}


@dataclass(frozen=True)
class RehearsalConfig:
    """Virtual-twin-only run parameters for validating a candidate plan."""

    robot: RobotConfig
    initial_joints: object
    obstacles: tuple
    delta_b_m: float
    delta_q_m: float
    goal_tolerance_m: float = 1e-3
    waypoint_tolerance_m: float = 0.005
    max_ticks: int = 200_000
    ik_tol_m: float = 1e-5
    ik_max_iter: int = 150


@dataclass(frozen=True)
class RehearsalReport:
    """What the operator sees before deciding."""

    min_clearance_m: Optional[float]  # candidate-plan audit; None without obstacles
    max_pose_deviation_m: float  # worst executed tracking error vs commanded waypoint
    completed: bool
    log_ref: str


@dataclass(frozen=True)
class Decision:
    plan_id: str
    verdict: str  # "approve" | "reject"
    actor: str
    time_ms: float
    override: bool = False


@dataclass
class PendingPlan:
    id: str
    trigger: object  # Incident that raised it
    candidate: Optional[WaypointPlan]
    created_tick: int
    status: str = AWAITING_REHEARSAL
    rehearsal: Optional[RehearsalReport] = None
    decision: Optional[Decision] = None
    deployed_tick: Optional[int] = None
    obstacle_index: Optional[int] = None

    def _transition(self, new_status: str) -> None:
        if new_status not in _NEXT[self.status]:
            raise StateTransitionError(
                f"plan {self.id}: illegal transition {self.status} -> {new_status}"
            )
        self.status = new_status


@dataclass
class _RehearsalTrace:
    ticks: int = 0
    poses: list = field(default_factory=list)


class HitlGate:
    """Pending-plan queue plus the decision state machine.

    Decisions may arrive from any thread (REST, CLI, tests); every mutation
    is serialized through one lock, and the engine observes statuses
    between ticks.
    """

    def __init__(self):
        self._lock = RLock()
        self._plans: dict = {}
        self._order: list = []
        self._counter = 0
        self.rehearsal_traces: dict = {}

    def raise_anomaly(
        self,
        incident,
        current_plan: WaypointPlan,
        obstacle: Optional[Obstacle],
        delta_b_m: float,
        tick: int,
        obstacle_index: Optional[int] = None,
    ) -> PendingPlan:
        """Open a pending plan for a blocking anomaly.

        With an obstacle, the candidate is the avoidance rewrite of the
        current plan; an infeasible rewrite leaves the candidate empty and
        the plan jumps straight to awaiting-decision (a human must reject
        or re-author the scenario). Without an obstacle the candidate is
        the current plan unchanged (the decision is whether to resume).
        """
        with self._lock:
            self._counter += 1
            plan_id = f"plan-{self._counter:04d}"
            status = AWAITING_REHEARSAL
            if obstacle is None:
                candidate = current_plan
            else:
                try:
                    candidate = replan_avoid(current_plan, obstacle, delta_b_m)
                except ReplanInfeasibleError:
                    candidate = None
                    status = AWAITING_DECISION
            pending = PendingPlan(
                id=plan_id,
                trigger=incident,
                candidate=candidate,
                created_tick=tick,
                status=status,
                obstacle_index=obstacle_index,
            )
            self._plans[plan_id] = pending
            self._order.append(plan_id)
            return pending

    def rehearse(self, pending: PendingPlan, config: RehearsalConfig) -> RehearsalReport:
        """Execute the candidate on a fresh virtual twin; fill the report.

        Clearance is audited over the candidate waypoints; the execution
        contributes the tracking-deviation and completion outcomes. A report
        is produced even when a bound is violated (completed=False) so the
        operator sees the failure.
        """
        with self._lock:
            if pending.candidate is None:
                raise UndefinedRehearsalError(f"plan {pending.id} has no candidate")
            if pending.status != AWAITING_REHEARSAL:
                raise StateTransitionError(
                    f"plan {pending.id}: rehearse requires {AWAITING_REHEARSAL}, "
                    f"status is {pending.status}"
                )
            report = _run_rehearsal(pending, config, self.rehearsal_traces)
            pending.rehearsal = report
            pending._transition(AWAITING_DECISION)
            return report

    def decide(
        self,
        plan_id: str,
        verdict: str,
        actor: str,
        time_ms: float = 0.0,
    ) -> PendingPlan:
        """Record the single decision for a plan.

        Approving a plan whose rehearsal did not complete is permitted but
        the decision is flagged override=True in the audit record.
        """
        with self._lock:
            if plan_id not in self._plans:
                raise PlanNotFoundError(plan_id)
            pending = self._plans[plan_id]
            if pending.decision is not None:
                raise DecisionConflictError(
                    f"plan {plan_id} already decided: {pending.decision.verdict} "
                    f"by {pending.decision.actor}"
                )
            if verdict not in ("approve", "reject"):
                raise ValueError(f"verdict must be approve or reject, got {verdict!r}")
            if pending.status != AWAITING_DECISION:
                raise StateTransitionError(
                    f"plan {plan_id}: decide requires {AWAITING_DECISION}, "
                    f"status is {pending.status}"
                )
            override = verdict == "approve" and (
                pending.rehearsal is None or not pending.rehearsal.completed
            )
            pending.decision = Decision(plan_id, verdict, actor, time_ms, override)
            pending._transition(APPROVED if verdict == "approve" else REJECTED)
            return pending

    def mark_deployed(self, plan_id: str, tick: int) -> PendingPlan:
        with self._lock:
            pending = self._plans[plan_id]
            pending._transition(DEPLOYED)
            pending.deployed_tick = tick
            return pending

    def get(self, plan_id: str) -> PendingPlan:
        with self._lock:
            if plan_id not in self._plans:
                raise PlanNotFoundError(plan_id)
            return self._plans[plan_id]

    def pending_plans(self) -> list:
        """All plans in FIFO raise order."""
        with self._lock:
            return [self._plans[pid] for pid in self._order]

    def front_undecided(self) -> Optional[PendingPlan]:
        with self._lock:
            for pid in self._order:
                if self._plans[pid].status in (AWAITING_REHEARSAL, AWAITING_DECISION):
                    return self._plans[pid]
            return None


def _run_rehearsal(pending: PendingPlan, config: RehearsalConfig, traces: dict) -> RehearsalReport:
    from twinsync.kinematics import solve_ik  # local: keeps module import light

    candidate = pending.candidate
    robot = RobotTwin(config.robot, VIRTUAL, config.initial_joints)
    tick_ms = config.robot.tick_ms
    trace = _RehearsalTrace()
    wp_index = 0
    seq = 0
    seed = robot.joints
    goal = candidate.waypoints[-1]
    max_dev = 0.0
    reached = False
    for tick in range(config.max_ticks):
        state = robot.snapshot()
        trace.poses.append(state.pose)
        target_wp = candidate.waypoints[wp_index]
        max_dev = max(max_dev, state.pose.distance_to(target_wp))
        if state.pose.distance_to(goal) <= config.goal_tolerance_m:
            reached = True
            trace.ticks = tick
            break
        if (
            wp_index < len(candidate.waypoints) - 1
            and state.pose.distance_to(target_wp) <= config.waypoint_tolerance_m
        ):
            wp_index += 1
            seq += 1
            joints = solve_ik(
                config.robot.chain,
                candidate.waypoints[wp_index],
                seed,
                tol=config.ik_tol_m,
                max_iter=config.ik_max_iter,
            )
            seed = joints
            robot.apply_command(CommandMsg(joints, tick * tick_ms, seq), tick * tick_ms)
        robot.step(tick_ms)

    if config.obstacles:
        plan_clearance = min(min_clearance(candidate, obs) for obs in config.obstacles)
    else:
        plan_clearance = None
    completed = (
        reached
        and (plan_clearance is None or plan_clearance >= config.delta_b_m)
        and max_dev <= config.delta_q_m
    )
    log_ref = f"rehearsal-{pending.id}"
    traces[log_ref] = trace
    return RehearsalReport(
        min_clearance_m=plan_clearance,
        max_pose_deviation_m=max_dev,
        completed=completed,
        log_ref=log_ref,
    )
