"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python kernels when
the extension is absent or TWINSYNC_PURE=1 is set.
"""

import os

if os.environ.get("TWINSYNC_PURE", "") not in ("", "0"):
    from twinsync.kinematics import _pure as kernels
else:
    try:
        from twinsync import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from twinsync.kinematics import _pure as kernels  # type: ignore[no-redef]

KERNEL_NAME: str = kernels.KERNEL_NAME

fk_pose = kernels.fk_pose
jacobian = kernels.jacobian
