# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kinematics kernels.

Mirrors twinsync.kinematics._pure operation for operation; the pure module
is the readable reference, this one is the fast path picked at import.
"""

from libc.math cimport cos, sin, atan2, asin, ceil, fabs

KERNEL_NAME = "compiled"

cdef double TWO_PI = 6.283185307179586476925287
cdef double PI = 3.141592653589793238462643


cdef inline double _wrap(double theta) nogil:
    return theta - TWO_PI * ceil((theta - PI) / TWO_PI)


def fk_pose(const double[:, ::1] dh, const double[::1] q):
    """End-frame pose for joint vector q: (x, y, z, roll, pitch, yaw)."""
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i
    cdef double r00 = 1.0, r01 = 0.0, r02 = 0.0
    cdef double r10 = 0.0, r11 = 1.0, r12 = 0.0
    cdef double r20 = 0.0, r21 = 0.0, r22 = 1.0
    cdef double px = 0.0, py = 0.0, pz = 0.0
    cdef double a, alpha, d, theta, ct, st, ca, sa
    cdef double a00, a01, a02, a03, a10, a11, a12, a13, a20, a21, a22, a23
    cdef double n00, n01, n02, n10, n11, n12, n20, n21, n22
    cdef double sp, roll, pitch, yaw

    for i in range(n):
        a = dh[i, 0]
        alpha = dh[i, 1]
        d = dh[i, 2]
        theta = q[i] + dh[i, 3]
        ct = cos(theta)
        st = sin(theta)
        ca = cos(alpha)
        sa = sin(alpha)
        a00 = ct; a01 = -st * ca; a02 = st * sa; a03 = a * ct
        a10 = st; a11 = ct * ca; a12 = -ct * sa; a13 = a * st
        a20 = 0.0; a21 = sa; a22 = ca; a23 = d

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
        r00 = n00; r01 = n01; r02 = n02
        r10 = n10; r11 = n11; r12 = n12
        r20 = n20; r21 = n21; r22 = n22

    sp = -r20
    if sp > 1.0:
        sp = 1.0
    elif sp < -1.0:
        sp = -1.0
    pitch = asin(sp)
    if fabs(r20) < 1.0 - 1e-12:
        roll = atan2(r21, r22)
        yaw = atan2(r10, r00)
    else:
        roll = 0.0
        yaw = atan2(-r01, r11)
    return (px, py, pz, _wrap(roll), _wrap(pitch), _wrap(yaw))


def jacobian(const double[:, ::1] dh, const double[::1] q, double[:, ::1] out):
    """Geometric Jacobian of the end frame; fills out (6, N)."""
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i
    cdef double r00 = 1.0, r01 = 0.0, r02 = 0.0
    cdef double r10 = 0.0, r11 = 1.0, r12 = 0.0
    cdef double r20 = 0.0, r21 = 0.0, r22 = 1.0
    cdef double px = 0.0, py = 0.0, pz = 0.0
    cdef double a, alpha, d, theta, ct, st, ca, sa
    cdef double a00, a01, a02, a03, a10, a11, a12, a13, a20, a21, a22, a23
    cdef double n00, n01, n02, n10, n11, n12, n20, n21, n22
    cdef double zx, zy, zz, dx, dy, dz
    # Temporary per-joint frame anchors (z axis, origin) recorded pre-link.
    cdef double[64][6] anchors

    if n > 64:
        raise ValueError("chain too long for compiled kernel (max 64 joints)")

    for i in range(n):
        anchors[i][0] = r02
        anchors[i][1] = r12
        anchors[i][2] = r22
        anchors[i][3] = px
        anchors[i][4] = py
        anchors[i][5] = pz
        a = dh[i, 0]
        alpha = dh[i, 1]
        d = dh[i, 2]
        theta = q[i] + dh[i, 3]
        ct = cos(theta)
        st = sin(theta)
        ca = cos(alpha)
        sa = sin(alpha)
        a00 = ct; a01 = -st * ca; a02 = st * sa; a03 = a * ct
        a10 = st; a11 = ct * ca; a12 = -ct * sa; a13 = a * st
        a20 = 0.0; a21 = sa; a22 = ca; a23 = d

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
        r00 = n00; r01 = n01; r02 = n02
        r10 = n10; r11 = n11; r12 = n12
        r20 = n20; r21 = n21; r22 = n22

    for i in range(n):
        zx = anchors[i][0]
        zy = anchors[i][1]
        zz = anchors[i][2]
        dx = px - anchors[i][3]
        dy = py - anchors[i][4]
        dz = pz - anchors[i][5]
        out[0, i] = zy * dz - zz * dy
        out[1, i] = zz * dx - zx * dz
        out[2, i] = zx * dy - zy * dx
        out[3, i] = zx
        out[4, i] = zy
        out[5, i] = zz
    return out
