"""Pure-Python kinematics kernels.

Fallback twin of the compiled module ``twinsync._kernels``. Both implement
the exact same arithmetic, in the same order, so results agree to the last
few ulps; the test suite pins the two backends against each other.

A chain is an (N, 4) float array of standard DH rows (a, alpha, d,
theta_offset); joint i contributes angle q[i] + theta_offset[i] about the
local z axis.
"""

import math

__all__ = ["fk_pose", "jacobian", "KERNEL_NAME"]

KERNEL_NAME = "pure"

_TWO_PI = 2.0 * math.pi


def _wrap(theta: float) -> float:
    # Maps to (-pi, pi]; exact fixed point for values already in range.
    return theta - _TWO_PI * math.ceil((theta - math.pi) / _TWO_PI)


def fk_pose(dh, q):
    """End-frame pose for joint vector q: (x, y, z, roll, pitch, yaw).

    Orientation is Z-Y-X roll/pitch/yaw, each wrapped to (-pi, pi].
    """
    n = len(q)
    # Running homogeneous transform, kept as scalars: rotation r.., origin p..
    r00, r01, r02 = 1.0, 0.0, 0.0
    r10, r11, r12 = 0.0, 1.0, 0.0
    r20, r21, r22 = 0.0, 0.0, 1.0
    px, py, pz = 0.0, 0.0, 0.0
    for i in range(n):
        a = float(dh[i, 0])
        alpha = float(dh[i, 1])
        d = float(dh[i, 2])
        theta = float(q[i]) + float(dh[i, 3])
        ct = math.cos(theta)
        st = math.sin(theta)
        ca = math.cos(alpha)
        sa = math.sin(alpha)
        # Link transform columns (standard DH).
        a00, a01, a02, a03 = ct, -st * ca, st * sa, a * ct
        a10, a11, a12, a13 = st, ct * ca, -ct * sa, a * st
        a20, a21, a22, a23 = 0.0, sa, ca, d

        px = px + r00 * a03 + r01 * a13 + r02 * a23
        py = py + r10 * a03 + r11 * a13 + r12 * a23
        pz = pz + r20 * a03 + r21 * a13 + r22 * a23

        n00 = r00 * a00 + r01 * a10 + r02 * a20
        n01 = r00 * a01 + r01 * a11 + r02 * a21
        n02 = r00 * a02 + r01 * a12 + r02 * a22
        n10 = r10 * a00 + r11 * a10 + r12 * a20
        n11 = r10 * a01 + r11 * a11 + r12 * a21
        n12 = r10 * a02 + r11 * a12 + r12 * a22
        n20 = r20 * a00 + r21 * a10 + r22 * a20
        n21 = r20 * a01 + r21 * a11 + r22 * a21
        n22 = r20 * a02 + r21 * a12 + r22 * a22
        r00, r01, r02 = n00, n01, n02
        r10, r11, r12 = n10, n11, n12
        r20, r21, r22 = n20, n21, n22

    sp = -r20
    if sp > 1.0:
        sp = 1.0
    elif sp < -1.0:
        sp = -1.0
    pitch = math.asin(sp)
    if abs(r20) < 1.0 - 1e-12:
        roll = math.atan2(r21, r22)
        yaw = math.atan2(r10, r00)
    else:
        # Gimbal lock: fold all z rotation into yaw.
        roll = 0.0
        yaw = math.atan2(-r01, r11)
    return (px, py, pz, _wrap(roll), _wrap(pitch), _wrap(yaw))


def jacobian(dh, q, out):
    """Geometric Jacobian of the end frame; fills out (6, N).

    Rows 0-2 are linear sensitivities (m/rad), rows 3-5 angular (rad/rad):
    column i is z_{i-1} x (p_e - p_{i-1}) over z_{i-1} for revolute joint i.
    """
    n = len(q)
    zs = [0.0] * (3 * n)
    ps = [0.0] * (3 * n)
    r00, r01, r02 = 1.0, 0.0, 0.0
    r10, r11, r12 = 0.0, 1.0, 0.0
    r20, r21, r22 = 0.0, 0.0, 1.0
    px, py, pz = 0.0, 0.0, 0.0
    for i in range(n):
        zs[3 * i + 0] = r02
        zs[3 * i + 1] = r12
        zs[3 * i + 2] = r22
        ps[3 * i + 0] = px
        ps[3 * i + 1] = py
        ps[3 * i + 2] = pz
        a = float(dh[i, 0])
        alpha = float(dh[i, 1])
        d = float(dh[i, 2])
        theta = float(q[i]) + float(dh[i, 3])
        ct = math.cos(theta)
        st = math.sin(theta)
        ca = math.cos(alpha)
        sa = math.sin(alpha)
        a00, a01, a02, a03 = ct, -st * ca, st * sa, a * ct
        a10, a11, a12, a13 = st, ct * ca, -ct * sa, a * st
        a20, a21, a22, a23 = 0.0, sa, ca, d

        px = px + r00 * a03 + r01 * a13 + r02 * a23
        py = py + r10 * a03 + r11 * a13 + r12 * a23
        pz = pz + r20 * a03 + r21 * a13 + r22 * a23

        n00 = r00 * a00 + r01 * a10 + r02 * a20
        n01 = r00 * a01 + r01 * a11 + r02 * a21
        n02 = r00 * a02 + r01 * a12 + r02 * a22
        n10 = r10 * a00 + r11 * a10 + r12 * a20
        n11 = r10 * a01 + r11 * a11 + r12 * a21
        n12 = r10 * a02 + r11 * a12 + r12 * a22
        n20 = r20 * a00 + r21 * a10 + r22 * a20
        n21 = r20 * a01 + r21 * a11 + r22 * a21
        n22 = r20 * a02 + r21 * a12 + r22 * a22
        r00, r01, r02 = n00, n01, n02
        r10, r11, r12 = n10, n11, n12
        r20, r21, r22 = n20, n21, n22

    for i in range(n):
        zx = zs[3 * i + 0]
        zy = zs[3 * i + 1]
        zz = zs[3 * i + 2]
        dx = px - ps[3 * i + 0]
        dy = py - ps[3 * i + 1]
        dz = pz - ps[3 * i + 2]
        out[0, i] = zy * dz - zz * dy
        out[1, i] = zz * dx - zx * dz
        out[2, i] = zx * dy - zy * dx
        out[3, i] = zx
        out[4, i] = zy
        out[5, i] = zz
    return out
