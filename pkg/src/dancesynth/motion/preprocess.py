"""Clip preprocessing before inpainting: root alignment, beat warping, blending."""

import numpy as np

from ..errors import ParameterError, ValidationError
from . import quat
from .clip import ROOT_DIMS, concatenate, end_position
from .kinematics import forward_kinematics


def align_root_points(prev, next_clip):
    """Rigidly move ``next_clip`` so its first root pose equals ``prev``'s last.

    Only a ground-plane translation and a yaw about +y are applied; heights
    and joint rotations are untouched.
    """
    if prev.skeleton != next_clip.skeleton:
        raise ValidationError("clips use different skeletons")
    target_x, target_z = end_position(prev)
    delta = quat.yaw(prev.root_rotation[-1]) - quat.yaw(next_clip.root_rotation[0])
    d = next_clip.data.copy()
    c, s = np.cos(delta), np.sin(delta)
    dx, dz = d[1:, 0].copy(), d[1:, 2].copy()
    d[1:, 0] = c * dx + s * dz
    d[1:, 2] = -s * dx + c * dz
    d[0, 0], d[0, 2] = target_x, target_z
    d[:, 3:7] = quat.canonicalize(quat.mul(quat.yaw_quat(delta), d[:, 3:7]))
    return next_clip.with_data(d)


def detect_kinematic_beats(clip, threshold_ratio=0.6, min_separation=None):
    """Frames where end-effector motion decelerates sharply.

    Speed at frame ``k`` is the summed forward-difference displacement of the
    end effectors relative to the root; deceleration at ``k`` is
    ``speed[k-1] - speed[k]``. Peaks above ``threshold_ratio`` times the
    clip's largest deceleration are kept greedily by height, at least
    ``min_separation`` frames apart (default ``fps / 10``).
    """
    n = len(clip)
    if n < 3:
        raise ValidationError(f"beat detection needs at least 3 frames, got {n}")
    if min_separation is None:
        min_separation = max(1, int(round(clip.fps / 10)))
    pos = forward_kinematics(clip)
    ends = clip.skeleton.end_effectors()
    rel = pos[:, ends] - pos[:, :1]
    speed = np.linalg.norm(np.diff(rel, axis=0), axis=-1).sum(axis=1)
    decel = np.zeros(n)
    decel[1:n - 1] = speed[:-1] - speed[1:]
    top = decel.max()
    if top <= 1e-9 + 1e-6 * speed.max():
        return []
    threshold = threshold_ratio * top
    left = np.concatenate([[-np.inf], decel[:-1]])
    right = np.concatenate([decel[1:], [-np.inf]])
    candidates = np.flatnonzero((decel >= threshold) & (decel >= left) & (decel >= right) & (decel > 0))
    picked = []
    for k in sorted(candidates, key=lambda i: (-decel[i], i)):
        if all(abs(k - p) >= min_separation for p in picked):
            picked.append(int(k))
    return sorted(picked)


class _Warp:
    """Monotone piecewise-linear map with linear extrapolation at both ends."""

    def __init__(self, src, dst):
        self.src = np.asarray(src, dtype=np.float64)
        self.dst = np.asarray(dst, dtype=np.float64)
        if len(self.src) == 1:
            self.src = np.append(self.src, self.src[0] + 1.0)
            self.dst = np.append(self.dst, self.dst[0] + 1.0)

    @staticmethod
    def _map(x, xs, ys):
        x = np.asarray(x, dtype=np.float64)
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        return ys[i] + (x - xs[i]) * slope, slope

    def forward(self, s):
        return self._map(s, self.src, self.dst)[0]

    def inverse(self, t):
        s, inv_slope = self._map(t, self.dst, self.src)
        return s, 1.0 / inv_slope


def align_beats(clip, kin_beats, music_beats):
    """Time-warp ``clip`` so kinematic beats land on musical beats.

    ``kin_beats`` are frame indices, ``music_beats`` seconds measured from the
    clip start; the two lists are paired in order and any surplus is ignored.
    Time zero stays anchored unless a kinematic beat sits on frame 0. Output
    frames are resampled at the clip fps with slerp for rotations, and
    per-frame ground displacements are divided by the local warp slope.
    """
    m = min(len(kin_beats), len(music_beats))
    if m == 0:
        return clip.copy()
    src = np.asarray(kin_beats[:m], dtype=np.float64) / clip.fps
    dst = np.asarray(music_beats[:m], dtype=np.float64)
    if src[0] > 0:
        src = np.concatenate([[0.0], src])
        dst = np.concatenate([[0.0], dst])
    if np.any(np.diff(src) <= 0) or np.any(np.diff(dst) <= 0) or (src[0] == 0 and dst[0] < 0):
        raise ValidationError("beat pairing gives a non-monotonic time warp")
    warp = _Warp(src, dst)
    t_end = clip.duration
    out_end = float(warp.forward(t_end))
    n_out = int(np.floor(out_end * clip.fps + 1e-9)) + 1
    tau = np.arange(n_out) / clip.fps
    s, slope = warp.inverse(tau)
    f = np.clip(s * clip.fps, 0.0, len(clip) - 1)
    return _resample(clip, f, slope)


def _resample(clip, f, slope):
    lo = np.floor(f).astype(int)
    hi = np.minimum(lo + 1, len(clip) - 1)
    w = f - lo
    d = clip.data
    n = len(f)
    out = np.empty((n, d.shape[1]))
    out[:, :3] = (1 - w)[:, None] * d[lo, :3] + w[:, None] * d[hi, :3]
    out[1:, 0] /= slope[1:]
    out[1:, 2] /= slope[1:]
    out[0, 0], out[0, 2] = d[0, 0], d[0, 2]
    out[:, 3:7] = quat.canonicalize(quat.slerp(d[lo, 3:7], d[hi, 3:7], w))
    jl = d[lo, ROOT_DIMS:].reshape(n, -1, 4)
    jh = d[hi, ROOT_DIMS:].reshape(n, -1, 4)
    out[:, ROOT_DIMS:] = quat.canonicalize(quat.slerp(jl, jh, w[:, None])).reshape(n, -1)
    return clip.with_data(out)


def blend_window(n_frames, junction, window):
    """Frame range ``[start, stop)`` of a window centered on ``junction``."""
    start = junction - window // 2
    stop = start + window
    if window < 0 or start < 0 or stop > n_frames:
        raise ParameterError(f"window {window} does not fit around frame {junction} of {n_frames}")
    return start, stop


def interpolate_gap(data, start, stop):
    """Fill rows ``[start, stop)`` by interpolating between the rows just outside.

    Rotations are slerped, ground displacements and height lerped, with
    weights ``(k + 1) / (width + 1)``.
    """
    out = np.array(data, dtype=np.float64, copy=True)
    width = stop - start
    if width <= 0:
        return out
    a = out[start - 1] if start > 0 else out[start]
    b = out[stop] if stop < len(out) else out[stop - 1]
    t = (np.arange(width) + 1.0) / (width + 1.0)
    out[start:stop, :3] = (1 - t)[:, None] * a[:3] + t[:, None] * b[:3]
    out[start:stop, 3:7] = quat.canonicalize(quat.slerp(a[3:7], b[3:7], t))
    qa = a[ROOT_DIMS:].reshape(-1, 4)
    qb = b[ROOT_DIMS:].reshape(-1, 4)
    out[start:stop, ROOT_DIMS:] = quat.canonicalize(
        quat.slerp(qa[None], qb[None], t[:, None])).reshape(width, -1)
    return out


def linear_blend(prev, next_clip, window):
    """Concatenate two root-aligned clips, blending across the junction.

    Inside the ``window`` frames centered on the junction, poses ramp from the
    last frame before the window to the first frame after it; everything
    outside is copied.
    """
    if window > min(len(prev), len(next_clip)):
        raise ParameterError(f"window {window} exceeds clip lengths {len(prev)}, {len(next_clip)}")
    joined = concatenate([prev, next_clip])
    start, stop = blend_window(len(joined), len(prev), window)
    return joined.with_data(interpolate_gap(joined.data, start, stop))
