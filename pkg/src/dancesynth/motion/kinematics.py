import numpy as np

from . import quat


def forward_kinematics(clip):
    """World positions of every skeleton joint, shape ``(N, J + 1, 3)``.

    Joint ``k`` sits at its parent's position plus the parent's global
    rotation applied to ``k``'s rest offset. The root follows
    :meth:`MotionClip.root_positions`.
    """
    skel = clip.skeleton
    n = len(clip)
    offsets = skel.offsets
    local = clip.joint_rotations
    pos = np.zeros((n, len(skel.joints), 3))
    rot = np.zeros((n, len(skel.joints), 4))
    pos[:, 0] = clip.root_positions()
    rot[:, 0] = quat.normalize(clip.root_rotation)
    for k in range(1, len(skel.joints)):
        parent = skel.joints[k].parent
        pos[:, k] = pos[:, parent] + quat.rotate(rot[:, parent], offsets[k])
        rot[:, k] = quat.mul(rot[:, parent], quat.normalize(local[:, k - 1]))
    return pos
