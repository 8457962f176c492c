"""Serial-chain kinematics: FK, geometric Jacobian, damped-least-squares IK.

All operations are pure and stateless. Joint vectors are plain float64
arrays; chains are standard DH tables (a, alpha, d, theta_offset per link)
with per-joint limits. Poses carry Cartesian position in meters and Z-Y-X
roll/pitch/yaw in radians wrapped to (-pi, pi].
"""

import math
from dataclasses import dataclass

import numpy as np

from twinsync.errors import DimensionError, DomainError, UnreachableTargetError
from twinsync.kinematics.backend import KERNEL_NAME, fk_pose, jacobian

__all__ = [
    "KERNEL_NAME",
    "Pose",
    "LinkParam",
    "KinematicChain",
    "wrap_angle",
    "forward_kinematics",
    "geometric_jacobian",
    "solve_ik",
    "panda_chain",
    "planar_chain",
    "chain_from_config",
    "PANDA_HOME",
]

_TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi], congruent mod 2*pi. Idempotent."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"angle must be finite, got {theta!r}")
    return theta - _TWO_PI * math.ceil((theta - math.pi) / _TWO_PI)


@dataclass(frozen=True)
class Pose:
    """End-effector pose: position (m) plus Z-Y-X roll/pitch/yaw (rad).

    Angles are wrapped to (-pi, pi] on construction.
    """

    x: float
    y: float
    z: float
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "roll", "pitch", "yaw"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"pose field {name} must be finite")
        object.__setattr__(self, "roll", wrap_angle(self.roll))
        object.__setattr__(self, "pitch", wrap_angle(self.pitch))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def distance_to(self, other: "Pose") -> float:
        dx = self.x - other.x
        dy = self.y - other.y
        dz = self.z - other.z
        return math.sqrt(dx * dx + dy * dy + dz * dz)

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.z, self.roll, self.pitch, self.yaw)


@dataclass(frozen=True)
class LinkParam:
    """Standard DH link row: length a (m), twist alpha (rad), offset d (m),
    joint-angle offset theta_offset (rad)."""

    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0

    def __post_init__(self):
        for name in ("a", "alpha", "d", "theta_offset"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"link field {name} must be finite")


class KinematicChain:
    """Immutable serial chain of revolute joints."""

    def __init__(self, links, joint_limits):
        links = tuple(links)
        if not links:
            raise DomainError("chain needs at least one link")
        limits = np.asarray(joint_limits, dtype=np.float64)
        if limits.shape != (len(links), 2):
            raise DimensionError(
                f"joint_limits shape {limits.shape} does not match {len(links)} links"
            )
        if not np.all(np.isfinite(limits)):
            raise DomainError("joint limits must be finite")
        if not np.all(limits[:, 0] < limits[:, 1]):
            raise DomainError("each joint limit must satisfy min < max")
        self.links = links
        self.joint_limits = limits
        self.joint_limits.setflags(write=False)
        self.dh = np.ascontiguousarray(
            [[l.a, l.alpha, l.d, l.theta_offset] for l in links], dtype=np.float64
        )
        self.dh.setflags(write=False)

    @property
    def joint_count(self) -> int:
        return len(self.links)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(q, self.joint_limits[:, 0]), self.joint_limits[:, 1])

    def validate_joints(self, q) -> np.ndarray:
        arr = np.ascontiguousarray(q, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.joint_count:
            raise DimensionError(
                f"expected {self.joint_count} joint angles, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("joint angles must be finite")
        return arr

    def within_limits(self, q: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(
            np.all(q >= self.joint_limits[:, 0] - tol)
            and np.all(q <= self.joint_limits[:, 1] + tol)
        )


def forward_kinematics(chain: KinematicChain, q) -> Pose:
    """Pose of the last link frame (product of per-link DH transforms)."""
    arr = chain.validate_joints(q)
    x, y, z, roll, pitch, yaw = fk_pose(chain.dh, arr)
    return Pose(x, y, z, roll, pitch, yaw)


def geometric_jacobian(chain: KinematicChain, q) -> np.ndarray:
    """6xN end-frame Jacobian: rows 0-2 linear (m/rad), rows 3-5 angular."""
    arr = chain.validate_joints(q)
    out = np.empty((6, chain.joint_count), dtype=np.float64)
    jacobian(chain.dh, arr, out)
    return out


def _rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _rotation_vector(r_target: np.ndarray, r_current: np.ndarray) -> np.ndarray:
    """Axis-angle error taking r_current to r_target."""
    r_err = r_target @ r_current.T
    trace = min(3.0, max(-1.0, float(np.trace(r_err))))
    angle = math.acos((trace - 1.0) / 2.0)
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array(
        [
            r_err[2, 1] - r_err[1, 2],
            r_err[0, 2] - r_err[2, 0],
            r_err[1, 0] - r_err[0, 1],
        ]
    ) / (2.0 * math.sin(angle))
    return axis * angle


def _dls_descend(chain, target, seed, tol, max_iter, damping, r_target):
    """One damped-least-squares descent; returns (q, best_residual)."""
    q = chain.clamp(seed)
    target_p = target.position()
    best = math.inf
    for _ in range(max_iter + 1):
        pose = forward_kinematics(chain, q)
        err_p = target_p - pose.position()
        residual = float(np.linalg.norm(err_p))
        best = min(best, residual)
        if residual <= tol:
            return q, best
        jac = geometric_jacobian(chain, q)
        if r_target is not None:
            r_cur = _rpy_matrix(pose.roll, pose.pitch, pose.yaw)
            err = np.concatenate([err_p, _rotation_vector(r_target, r_cur)])
            j_task = jac
        else:
            err = err_p
            j_task = jac[0:3]
        gram = j_task @ j_task.T + (damping * damping) * np.eye(j_task.shape[0])
        dq = j_task.T @ np.linalg.solve(gram, err)
        q = chain.clamp(q + dq)
    return None, best


def solve_ik(
    chain: KinematicChain,
    target: Pose,
    seed,
    tol: float = 1e-4,
    max_iter: int = 200,
    damping: float = 0.05,
    track_orientation: bool = False,
) -> np.ndarray:
    """Damped-least-squares IK toward target; position error governs success.

    Iterates dq = J^T (J J^T + damping^2 I)^(-1) e from the given seed,
    clamping to joint limits after every step. If the seeded descent stalls,
    a short fixed ladder of alternative start postures (mid-limits, seed
    offset by +-0.6 rad) is tried so branch choices near joint limits do not
    strand the solver; everything is deterministic. With track_orientation
    the error vector also carries the axis-angle orientation error, but
    convergence is still declared on position alone.

    Raises UnreachableTargetError (with the best residual seen) when no
    descent reaches position error <= tol within max_iter iterations.
    """
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    seed = chain.validate_joints(seed)
    r_target = _rpy_matrix(target.roll, target.pitch, target.yaw) if track_orientation else None
    starts = [
        seed,
        chain.joint_limits.mean(axis=1),
        seed + 0.6,
        seed - 0.6,
    ]
    best = math.inf
    for start in starts:
        q, residual = _dls_descend(chain, target, start, tol, max_iter, damping, r_target)
        best = min(best, residual)
        if q is not None:
            return q
    raise UnreachableTargetError(
        f"no IK convergence to {tol} m within {max_iter} iterations "
        f"(best residual {best:.6g} m)",
        best_residual=best,
    )


# Default 7-DOF chain, Panda-like dimensions; full table in docs/chain.md.
_PANDA_DH = (
    LinkParam(0.0, -math.pi / 2, 0.333),
    LinkParam(0.0, math.pi / 2, 0.0),
    LinkParam(0.0825, math.pi / 2, 0.316),
    LinkParam(-0.0825, -math.pi / 2, 0.0),
    LinkParam(0.0, math.pi / 2, 0.384),
    LinkParam(0.088, math.pi / 2, 0.0),
    LinkParam(0.0, 0.0, 0.107),
)

_PANDA_LIMITS = (
    (-2.8973, 2.8973),
    (-1.7628, 1.7628),
    (-2.8973, 2.8973),
    (-3.0718, -0.0698),
    (-2.8973, 2.8973),
    (-0.0175, 3.7525),
    (-2.8973, 2.8973),
)

# Elbow-down ready posture used as the default IK seed and start state.
PANDA_HOME = np.array([0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.79])


def panda_chain() -> KinematicChain:
    """The built-in 7-DOF arm (preset name "panda7")."""
    return KinematicChain(_PANDA_DH, _PANDA_LIMITS)


def planar_chain(*lengths: float) -> KinematicChain:
    """N-joint planar arm in the X-Y plane; handy for analytic checks."""
    links = [LinkParam(a, 0.0, 0.0) for a in lengths]
    limits = [(-math.pi, math.pi)] * len(links)
    return KinematicChain(links, limits)


def chain_from_config(spec) -> KinematicChain:
    """Build a chain from a config value: preset name or explicit table."""
    if spec is None or spec == "panda7":
        return panda_chain()
    if isinstance(spec, str):
        raise DomainError(f"unknown chain preset {spec!r}")
    links = [
        LinkParam(
            float(row["a"]),
            float(row["alpha"]),
            float(row["d"]),
            float(row.get("theta_offset", 0.0)),
        )
        for row in spec["links"]
    ]
    return KinematicChain(links, spec["joint_limits"])
