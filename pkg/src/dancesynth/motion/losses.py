"""SO(3) geodesic distance and the two reconstruction losses.

The geodesic angle between quaternions ``p`` and ``q`` is computed from the
relative rotation ``r = conj(q) * p`` as ``2 * atan2(|r_xyz|, |r_w|)``. The
ratio is scale free, so inputs need not be normalized, the result lies in
``[0, pi]``, and ``q`` and ``-q`` give the same answer.
"""

import numpy as np

from ..errors import DimensionError, ValidationError
from ..nncore import tensor as T
from ..nncore.tensor import Tensor

UNIT_TOL = 1e-6


def _split(q):
    return q[..., 0], q[..., 1], q[..., 2], q[..., 3]


def quat_geodesic(pred, gt):
    """Differentiable per-quaternion angles; works on Tensors or arrays."""
    pw, px, py, pz = _split(pred)
    gw, gx, gy, gz = _split(gt)
    w = gw * pw + gx * px + gy * py + gz * pz
    vx = gw * px - pw * gx - (gy * pz - gz * py)
    vy = gw * py - pw * gy - (gz * px - gx * pz)
    vz = gw * pz - pw * gz - (gx * py - gy * px)
    if isinstance(w, Tensor):
        v = T.stack([vx, vy, vz], axis=-1)
        return 2.0 * T.atan2(T.norm(v), T.tabs(w))
    return 2.0 * np.arctan2(np.sqrt(vx * vx + vy * vy + vz * vz), np.abs(w))


def _matrix_angle(a, b):
    m = a @ np.swapaxes(b, -1, -2)
    cos = (np.trace(m, axis1=-2, axis2=-1) - 1.0) / 2.0
    axis = np.stack([m[..., 2, 1] - m[..., 1, 2], m[..., 0, 2] - m[..., 2, 0],
                     m[..., 1, 0] - m[..., 0, 1]], axis=-1)
    sin = 0.5 * np.linalg.norm(axis, axis=-1)
    return np.arctan2(sin, cos)


def geodesic_distance(r, r_hat):
    """Angle of ``r @ r_hat.T`` in radians, for unit quaternions or 3x3 matrices."""
    r = np.asarray(r, dtype=np.float64)
    r_hat = np.asarray(r_hat, dtype=np.float64)
    if r.shape != r_hat.shape:
        raise DimensionError(f"rotation shapes differ: {r.shape} vs {r_hat.shape}")
    if r.shape[-2:] == (3, 3):
        return _matrix_angle(r, r_hat)
    if r.shape[-1] != 4:
        raise DimensionError("rotations must be (..., 4) quaternions or (..., 3, 3) matrices", axis=-1)
    for q in (r, r_hat):
        dev = np.max(np.abs(np.linalg.norm(q, axis=-1) - 1.0))
        if dev > UNIT_TOL:
            raise ValidationError(f"quaternion norm off by {dev:.3g}")
    return quat_geodesic(r, r_hat)


def _as_quats(x):
    """View joint parameters ``(..., 4J)`` or ``(..., J, 4)`` as ``(..., J, 4)``."""
    if hasattr(x, "joint_part"):
        x = x.joint_part
    if not isinstance(x, Tensor):
        x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 4:
        if x.shape[-1] % 4:
            raise DimensionError(f"joint width {x.shape[-1]} is not a multiple of 4", axis=-1)
        x = x.reshape(x.shape[:-1] + (x.shape[-1] // 4, 4))
    return x


def joint_rotation_loss(pred, gt):
    """Sum over frames and joints of the geodesic angle.

    ``pred`` may be a Tensor (raw network output, normalization not needed);
    the result is then a scalar Tensor, otherwise a float.
    """
    p = _as_quats(pred)
    g = _as_quats(gt)
    g = g.data if isinstance(g, Tensor) else g
    if p.shape != g.shape:
        raise DimensionError(f"pred {p.shape} vs ground truth {g.shape}", axis=0)
    angles = quat_geodesic(p, g)
    return angles.sum() if isinstance(angles, Tensor) else float(angles.sum())


def root_point_loss(pred, gt):
    """Sum over frames of the L1 distance between 7-value root parameter rows."""
    if hasattr(pred, "root_part"):
        pred = pred.root_part
    if hasattr(gt, "root_part"):
        gt = gt.root_part
    gt = gt.data if isinstance(gt, Tensor) else np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionError(f"pred {pred.shape} vs ground truth {gt.shape}", axis=0)
    if isinstance(pred, Tensor):
        return T.tabs(pred - gt).sum()
    return float(np.abs(np.asarray(pred) - gt).sum())
