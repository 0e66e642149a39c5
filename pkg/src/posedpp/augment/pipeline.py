"""Limb-rotation warp augmentation: control points -> TPS -> warp -> inpaint."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..kernels import PoseInstance
from .image import ImageGrid, warp_image
from .inpaint import inpaint_telea
from .skeleton import (
    ANIMAL_POSE,
    DEFAULT_MAX_ANGLE,
    Skeleton,
    limb_control_points,
    rotate_about,
    sample_limb_rotation,
)
from .tps import tps_fit

DEFAULT_RADIUS = 3


@dataclass(frozen=True)
class WarpResult:
    image: Optional[ImageGrid]
    pose: PoseInstance
    limbs: tuple
    angles: tuple
    applied: bool


def rotate_limbs(pose: PoseInstance, skeleton: Skeleton, limbs: Sequence[int], angles) -> PoseInstance:
    """Pose with each listed limb's knee and paw rotated about its elbow."""
    kp = pose.keypoints.copy()
    for li, a in zip(limbs, np.broadcast_to(angles, (len(limbs),))):
        elbow, knee, paw = skeleton.limbs[li]
        kp[[knee, paw], :2] = rotate_about(pose.keypoints[[knee, paw], :2],
                                          pose.keypoints[elbow, :2], a)
    return pose.with_keypoints(kp)


def warp_augment(pose: PoseInstance, img: Optional[ImageGrid] = None, seed: int = 0,
                 skeleton: Skeleton = ANIMAL_POSE, max_angle: float = DEFAULT_MAX_ANGLE,
                 radius: int = DEFAULT_RADIUS, limbs: Optional[Sequence[int]] = None,
                 angles=None, lam: float = 0.0) -> WarpResult:
    """Rotate random limbs and warp the image to match.

    Without ``img`` only the label transform is produced. When no limb is
    fully visible the input is returned unchanged with ``applied=False``.
    """
    if limbs is None:
        rng = np.random.default_rng(seed)
        limbs, angles = sample_limb_rotation(pose, skeleton, rng, max_angle)
    limbs = list(limbs)
    angles = np.broadcast_to(np.asarray(0.0 if angles is None else angles, dtype=np.float64),
                             (len(limbs),))
    frame = (img.width, img.height) if img is not None else None
    src, dst = limb_control_points(pose, skeleton, angles, limbs, frame=frame, max_angle=180.0)
    if len(src) == 0:
        return WarpResult(img, pose, (), (), False)
    new_pose = rotate_limbs(pose, skeleton, limbs, angles)
    out = None
    if img is not None:
        T = tps_fit(src, dst, lam)
        warped = warp_image(img, T)
        out = inpaint_telea(warped, radius) if warped.invalid.any() else warped
    return WarpResult(out, new_pose, tuple(limbs), tuple(float(a) for a in angles), True)
