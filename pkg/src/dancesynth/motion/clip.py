"""Skeletons, per-frame motion parameters, and the clip file format.

A frame holds ``P = 7 + 4 * J`` values laid out as::

    [dx, y, dz, qw, qx, qy, qz, joint_1 (w, x, y, z), ..., joint_J]

``dx``/``dz`` are ground-plane root displacements in meters per frame and
``y`` is the absolute root height. The root position of frame ``i`` is the
inclusive running sum of displacements, so frame 0's displacement is the
clip's absolute start on the ground plane.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import blobio
from ..errors import DimensionError, ValidationError
from . import quat

ROOT_DIMS = 7
TAG = "motionclip"


class Joint(NamedTuple):
    name: str
    parent: int | None
    offset: tuple


@dataclass(frozen=True)
class Skeleton:
    joints: tuple

    def __post_init__(self):
        joints = tuple(Joint(j[0], j[1], tuple(float(v) for v in j[2])) for j in self.joints)
        object.__setattr__(self, "joints", joints)
        roots = [i for i, j in enumerate(joints) if j.parent is None]
        if roots != [0]:
            raise ValidationError("skeleton needs exactly one root, at index 0")
        for i, j in enumerate(joints[1:], start=1):
            if not 0 <= j.parent < i:
                raise ValidationError(f"joint {j.name!r}: parent {j.parent} must precede it")
            if not np.all(np.isfinite(j.offset)) or len(j.offset) != 3:
                raise ValidationError(f"joint {j.name!r}: offset must be 3 finite values")

    @property
    def n_joints(self):
        """Number of rotated non-root joints (``J``)."""
        return len(self.joints) - 1

    @property
    def parents(self):
        return [j.parent for j in self.joints]

    @property
    def offsets(self):
        return np.array([j.offset for j in self.joints])

    def end_effectors(self):
        has_child = {j.parent for j in self.joints[1:]}
        return [i for i in range(1, len(self.joints)) if i not in has_child]

    def to_json(self):
        return [[j.name, j.parent, list(j.offset)] for j in self.joints]

    @classmethod
    def from_json(cls, data):
        return cls(tuple((name, parent, tuple(offset)) for name, parent, offset in data))


def default_skeleton():
    """Desk-scale rig: root, spine, head, two 2-segment arms, two legs (J = 8)."""
    return Skeleton((
        ("hips", None, (0.0, 0.0, 0.0)),
        ("spine", 0, (0.0, 0.25, 0.0)),
        ("head", 1, (0.0, 0.30, 0.0)),
        ("l_arm", 1, (0.18, 0.22, 0.0)),
        ("l_forearm", 3, (0.28, 0.0, 0.0)),
        ("r_arm", 1, (-0.18, 0.22, 0.0)),
        ("r_forearm", 5, (-0.28, 0.0, 0.0)),
        ("l_leg", 0, (0.10, -0.45, 0.0)),
        ("r_leg", 0, (-0.10, -0.45, 0.0)),
    ))


class MotionFrame(NamedTuple):
    root_velocity: np.ndarray
    root_rotation: np.ndarray
    joint_rotations: np.ndarray


@dataclass
class MotionClip:
    skeleton: Skeleton
    fps: float
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.array(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DimensionError(f"clip data must be N x P, got {self.data.shape}")
        expected = ROOT_DIMS + 4 * self.skeleton.n_joints
        if self.data.shape[1] != expected:
            raise DimensionError(f"clip has {self.data.shape[1]} parameters, skeleton needs {expected}", axis=1)
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")

    @classmethod
    def from_parts(cls, skeleton, fps, root_velocity, root_rotation, joint_rotations):
        n = len(root_velocity)
        data = np.concatenate([np.asarray(root_velocity).reshape(n, 3),
                               np.asarray(root_rotation).reshape(n, 4),
                               np.asarray(joint_rotations).reshape(n, -1)], axis=1)
        return cls(skeleton, fps, data)

    def __len__(self):
        return self.data.shape[0]

    @property
    def n_joints(self):
        return self.skeleton.n_joints

    @property
    def root_velocity(self):
        return self.data[:, 0:3]

    @property
    def root_rotation(self):
        return self.data[:, 3:7]

    @property
    def root_part(self):
        return self.data[:, :ROOT_DIMS]

    @property
    def joint_part(self):
        return self.data[:, ROOT_DIMS:]

    @property
    def joint_rotations(self):
        return self.data[:, ROOT_DIMS:].reshape(len(self), self.n_joints, 4)

    @property
    def duration(self):
        return (len(self) - 1) / self.fps

    def frame(self, i):
        return MotionFrame(self.root_velocity[i].copy(), self.root_rotation[i].copy(),
                           self.joint_rotations[i].copy())

    def root_positions(self):
        """Ground-plane integrated root positions with absolute height, ``(N, 3)``."""
        v = self.root_velocity
        pos = np.cumsum(v, axis=0)
        pos[:, 1] = v[:, 1]
        return pos

    def with_data(self, data):
        return MotionClip(self.skeleton, self.fps, data)

    def copy(self):
        return self.with_data(self.data.copy())

    def normalized(self):
        """Unit, ``w >= 0`` quaternions throughout."""
        d = self.data.copy()
        n = len(self)
        d[:, 3:7] = quat.canonicalize(quat.normalize(d[:, 3:7]))
        d[:, ROOT_DIMS:] = quat.canonicalize(quat.normalize(
            d[:, ROOT_DIMS:].reshape(n, -1, 4))).reshape(n, -1)
        return self.with_data(d)

    def validate(self, tol=1e-9):
        if len(self) == 0:
            raise ValidationError("clip has no frames")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("clip contains non-finite values")
        norms = np.linalg.norm(self.data[:, 3:].reshape(len(self), -1, 4), axis=-1)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > tol:
            raise ValidationError(f"quaternion norm deviates from 1 by {worst:.3g}")
        return self


def rest_frame(skeleton, height=1.0):
    frame = np.zeros(ROOT_DIMS + 4 * skeleton.n_joints)
    frame[1] = height
    frame[3] = 1.0
    frame[ROOT_DIMS::4] = 1.0
    return frame


def hold_clip(skeleton, fps, frame, n_frames, position=(0.0, 0.0)):
    """``n_frames`` copies of one pose, standing still at ground ``position``."""
    data = np.repeat(np.asarray(frame, dtype=np.float64)[None], n_frames, axis=0)
    data[:, 0] = 0.0
    data[:, 2] = 0.0
    data[0, 0], data[0, 2] = position
    return MotionClip(skeleton, fps, data)


def end_position(clip):
    """Ground-plane ``(x, z)`` root position at the last frame."""
    p = clip.root_positions()[-1]
    return float(p[0]), float(p[2])


def concatenate(clips):
    """Join clips that carry absolute start positions into one trajectory.

    Each later clip's first displacement is rewritten relative to the end of
    the clip before it, so every clip keeps its absolute ground-plane path.
    """
    clips = [c for c in clips if len(c)]
    if not clips:
        raise ValidationError("nothing to concatenate")
    first = clips[0]
    for c in clips[1:]:
        if c.skeleton != first.skeleton or c.fps != first.fps:
            raise ValidationError("clips differ in skeleton or fps")
    parts = [first.data]
    x, z = end_position(first)
    for c in clips[1:]:
        d = c.data.copy()
        d[0, 0] -= x
        d[0, 2] -= z
        parts.append(d)
        x, z = end_position(c)
    return MotionClip(first.skeleton, first.fps, np.concatenate(parts, axis=0))


def save_clip(path, clip, meta=None):
    info = {"fps": clip.fps, "n_frames": len(clip), "n_joints": clip.n_joints,
            "skeleton": clip.skeleton.to_json(), **(meta or {})}
    blobio.write_store(path, TAG, {"frames": clip.data}, info, blobs={"frames": "frames.f64"})


def load_clip(path):
    arrays, meta = blobio.read_store(path, TAG)
    skeleton = Skeleton.from_json(meta["skeleton"])
    frames = arrays["frames"]
    if frames.shape != (meta["n_frames"], ROOT_DIMS + 4 * meta["n_joints"]):
        raise DimensionError(f"{path}: frame blob shape {frames.shape} disagrees with manifest")
    return MotionClip(skeleton, float(meta["fps"]), frames)


def write_keypoints(path, keypoints, fps):
    """One text record per frame: index followed by (J+1) xyz triples."""
    keypoints = np.asarray(keypoints)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"keypoints frames={keypoints.shape[0]} points={keypoints.shape[1]} fps={fps!r}\n")
        for i, frame in enumerate(keypoints):
            fh.write(f"{i} " + " ".join(repr(float(v)) for v in frame.ravel()) + "\n")


def read_keypoints(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        fields = dict(item.split("=") for item in header[1:])
        n, p = int(fields["frames"]), int(fields["points"])
        rows = [np.array(line.split()[1:], dtype=np.float64) for line in fh if line.strip()]
    if len(rows) != n:
        raise ValidationError(f"{path}: header says {n} frames, found {len(rows)}")
    return np.array(rows).reshape(n, p, 3), float(fields["fps"])
