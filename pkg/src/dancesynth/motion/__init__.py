"""Quaternion skeleton motion: clips, kinematics, SO(3) losses, preprocessing."""

from . import quat
from .clip import (ROOT_DIMS, Joint, MotionClip, MotionFrame, Skeleton, concatenate,
                   default_skeleton, end_position, hold_clip, load_clip, read_keypoints,
                   rest_frame, save_clip, write_keypoints)
from .kinematics import forward_kinematics
from .losses import geodesic_distance, joint_rotation_loss, quat_geodesic, root_point_loss
from .preprocess import (align_beats, align_root_points, blend_window, detect_kinematic_beats,
                         interpolate_gap, linear_blend)

__all__ = [
    "ROOT_DIMS", "Joint", "MotionClip", "MotionFrame", "Skeleton", "align_beats",
    "align_root_points", "blend_window", "concatenate", "default_skeleton",
    "detect_kinematic_beats", "end_position", "forward_kinematics", "geodesic_distance",
    "hold_clip", "interpolate_gap", "joint_rotation_loss", "linear_blend", "load_clip", "quat",
    "quat_geodesic", "read_keypoints", "rest_frame", "root_point_loss", "save_clip",
    "write_keypoints",
]
