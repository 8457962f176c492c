"""Cartesian waypoint planning, box obstacles, and lift-over avoidance.

Plans are straight-line position sweeps sampled at a uniform spacing, with
per-axis shortest-arc orientation interpolation. Avoidance raises every
waypoint whose footprint falls inside the obstacle outline (inflated by the
clearance bound) above the obstacle, inserting vertical ramps just outside
the inflated outline so the whole plan keeps clearance >= the bound.
"""

import math
from dataclasses import dataclass, replace

from twinsync.errors import DomainError, ReplanInfeasibleError
from twinsync.kinematics import Pose, wrap_angle

__all__ = [
    "DIRECT",
    "REPLANNED",
    "TrajectoryGoal",
    "WaypointPlan",
    "Obstacle",
    "plan_waypoints",
    "clearance",
    "replan_avoid",
    "min_clearance",
]

DIRECT = "direct"
REPLANNED = "avoidance-replanned"

_SPACING_SLACK = 1e-9


@dataclass(frozen=True)
class TrajectoryGoal:
    """User goal: target pose plus waypoint spacing (m)."""

    target: Pose
    max_step: float = 0.01

    def __post_init__(self):
        if not (self.max_step > 0.0):
            raise DomainError("max_step must be positive")


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box standing on the floor: footprint center/size, height."""

    center_x: float
    center_y: float
    size_x: float
    size_y: float
    height: float

    def __post_init__(self):
        if not (self.size_x > 0.0 and self.size_y > 0.0):
            raise DomainError("obstacle sizes must be positive")
        if self.height < 0.0:
            raise DomainError("obstacle height must be >= 0")

    def footprint_contains(self, pose: Pose, margin: float = 0.0) -> bool:
        return (
            abs(pose.x - self.center_x) <= self.size_x / 2.0 + margin
            and abs(pose.y - self.center_y) <= self.size_y / 2.0 + margin
        )


@dataclass(frozen=True)
class WaypointPlan:
    """Ordered waypoints; provenance records whether avoidance rewrote it."""

    waypoints: tuple
    provenance: str = DIRECT
    max_step: float = 0.01

    def __post_init__(self):
        if not self.waypoints:
            raise DomainError("plan must contain at least one waypoint")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a.distance_to(b) > self.max_step + _SPACING_SLACK:
                raise DomainError(
                    f"waypoint spacing {a.distance_to(b):.6g} exceeds max_step {self.max_step}"
                )

    @property
    def target(self) -> Pose:
        return self.waypoints[-1]

    def __len__(self) -> int:
        return len(self.waypoints)


def _interpolate(a: Pose, b: Pose, t: float) -> Pose:
    droll = wrap_angle(b.roll - a.roll)
    dpitch = wrap_angle(b.pitch - a.pitch)
    dyaw = wrap_angle(b.yaw - a.yaw)
    return Pose(
        a.x + (b.x - a.x) * t,
        a.y + (b.y - a.y) * t,
        a.z + (b.z - a.z) * t,
        wrap_angle(a.roll + droll * t),
        wrap_angle(a.pitch + dpitch * t),
        wrap_angle(a.yaw + dyaw * t),
    )


def _resample_polyline(keys, max_step: float):
    """Uniformly subdivide each segment; key poses are kept exactly."""
    points = [keys[0]]
    for a, b in zip(keys, keys[1:]):
        dist = a.distance_to(b)
        if dist == 0.0:
            continue
        n = max(1, math.ceil(dist / max_step))
        for k in range(1, n):
            points.append(_interpolate(a, b, k / n))
        points.append(b)
    return points


def plan_waypoints(start: Pose, goal: TrajectoryGoal) -> WaypointPlan:
    """Straight-line plan from start to the goal target.

    Position spacing is uniform and <= max_step; both endpoints are kept
    bitwise exact. A zero-length request yields a single-waypoint plan.
    """
    dist = start.distance_to(goal.target)
    if dist == 0.0:
        return WaypointPlan((goal.target,), DIRECT, goal.max_step)
    n = max(1, math.ceil(dist / goal.max_step))
    points = [start]
    for k in range(1, n):
        points.append(_interpolate(start, goal.target, k / n))
    points.append(goal.target)
    return WaypointPlan(tuple(points), DIRECT, goal.max_step)


def clearance(p: Pose, obs: Obstacle) -> float:
    """Euclidean distance from p's position to the box; 0 inside or on it."""
    dx = abs(p.x - obs.center_x) - obs.size_x / 2.0
    if dx < 0.0:
        dx = 0.0
    dy = abs(p.y - obs.center_y) - obs.size_y / 2.0
    if dy < 0.0:
        dy = 0.0
    if p.z > obs.height:
        dz = p.z - obs.height
    elif p.z < 0.0:
        dz = -p.z
    else:
        dz = 0.0
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def min_clearance(plan: WaypointPlan, obs: Obstacle) -> float:
    """Smallest waypoint clearance over the whole plan."""
    return min(clearance(p, obs) for p in plan.waypoints)


def _lift(pose: Pose, z_top: float) -> Pose:
    if pose.z >= z_top:
        return pose
    return replace(pose, z=z_top)


def replan_avoid(plan: WaypointPlan, obs: Obstacle, delta_b: float) -> WaypointPlan:
    """Lift-over rewrite keeping every waypoint at clearance >= delta_b.

    Waypoints whose X-Y lies inside the footprint inflated by delta_b are
    raised to obstacle height + delta_b; vertical ramps are inserted at the
    last waypoint before / first waypoint after each lifted span (both still
    outside the inflated outline) and the polyline is resampled so spacing
    stays within max_step. Endpoints are never moved: if either endpoint
    sits inside the inflated outline below the lifted height the replan is
    infeasible.
    """
    if not (delta_b > 0.0):
        raise DomainError("delta_b must be positive")
    # Nanometer guard pad so the clearance audit holds exactly in floats
    # (h + delta_b can round a hair below the intended lifted height).
    pad = 1e-9
    z_top = obs.height + delta_b + pad
    wps = plan.waypoints
    inside = [obs.footprint_contains(p, margin=delta_b + pad) for p in wps]
    needs_lift = [flag and p.z < z_top for flag, p in zip(inside, wps)]
    if not any(needs_lift):
        return replace(plan, provenance=REPLANNED)
    if needs_lift[0]:
        raise ReplanInfeasibleError(
            "plan start lies inside the inflated obstacle outline below the lifted height"
        )
    if needs_lift[-1]:
        raise ReplanInfeasibleError(
            "goal lies inside the inflated obstacle outline below the lifted height"
        )

    keys = []
    i = 0
    n = len(wps)
    while i < n:
        if not inside[i]:
            keys.append(wps[i])
            i += 1
            continue
        span_end = i
        while span_end + 1 < n and inside[span_end + 1]:
            span_end += 1
        # Ramp up at the last outside waypoint, cross at lifted height,
        # ramp down at the first outside waypoint past the span. A span
        # touching an endpoint needs no ramp there (the endpoint already
        # satisfies z >= lifted height or the replan would be infeasible).
        if i > 0:
            keys.append(_lift(wps[i - 1], z_top))
        for j in range(i, span_end + 1):
            keys.append(_lift(wps[j], z_top))
        if span_end + 1 < n:
            keys.append(_lift(wps[span_end + 1], z_top))
        i = span_end + 1
    points = _resample_polyline(keys, plan.max_step)
    return WaypointPlan(tuple(points), REPLANNED, plan.max_step)
