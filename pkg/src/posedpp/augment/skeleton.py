"""Keypoint layout and limb-rotation control points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ParameterError
from ..kernels import PoseInstance

DEFAULT_MAX_ANGLE = 15.0

ANIMAL_POSE_KEYPOINTS = (
    "left_eye", "right_eye", "left_earbase", "right_earbase", "nose",
    "left_front_elbow", "right_front_elbow", "left_back_elbow", "right_back_elbow",
    "left_front_knee", "right_front_knee", "left_back_knee", "right_back_knee",
    "left_front_paw", "right_front_paw", "left_back_paw", "right_back_paw",
)


@dataclass(frozen=True)
class Skeleton:
    keypoint_names: tuple
    limbs: tuple  # (elbow, knee, paw) index triples
    flip_pairs: tuple

    def __post_init__(self):
        J = len(self.keypoint_names)
        for limb in self.limbs:
            if len(limb) != 3 or len(set(limb)) != 3 or not all(0 <= i < J for i in limb):
                raise ParameterError(f"invalid limb {limb}")
        used: set = set()
        for a, b in self.flip_pairs:
            if a == b or a in used or b in used or not (0 <= a < J and 0 <= b < J):
                raise ParameterError(f"flip pairs must be disjoint index pairs, got {(a, b)}")
            used.update((a, b))

    @property
    def num_keypoints(self) -> int:
        return len(self.keypoint_names)

    def flip_permutation(self) -> np.ndarray:
        perm = np.arange(self.num_keypoints)
        for a, b in self.flip_pairs:
            perm[a], perm[b] = b, a
        return perm

    @classmethod
    def animal_pose(cls) -> "Skeleton":
        return ANIMAL_POSE


ANIMAL_POSE = Skeleton(
    keypoint_names=ANIMAL_POSE_KEYPOINTS,
    limbs=((5, 9, 13), (6, 10, 14), (7, 11, 15), (8, 12, 16)),
    flip_pairs=((0, 1), (2, 3), (5, 6), (7, 8), (9, 10), (11, 12), (13, 14), (15, 16)),
)


def rotate_about(points, pivot, angle_deg: float) -> np.ndarray:
    """Counter-clockwise rotation (x right, y up) of ``points`` about ``pivot``."""
    t = np.deg2rad(angle_deg)
    c, s = np.cos(t), np.sin(t)
    R = np.array([[c, -s], [s, c]])
    p = np.asarray(points, dtype=np.float64) - pivot
    return p @ R.T + pivot


def visible_limbs(pose: PoseInstance, skeleton: Skeleton) -> list:
    vis = pose.visible
    return [i for i, limb in enumerate(skeleton.limbs) if all(vis[j] for j in limb)]


def _dedupe(src, dst, tol=1e-9):
    keep_s, keep_d = [], []
    for s, d in zip(src, dst):
        if any(np.hypot(*(s - q)) < tol for q in keep_s):
            continue
        keep_s.append(s)
        keep_d.append(d)
    return np.array(keep_s).reshape(-1, 2), np.array(keep_d).reshape(-1, 2)


def limb_control_points(pose: PoseInstance, skeleton: Skeleton, angle,
                        limb_mask: Optional[Sequence[int]] = None,
                        frame: Optional[tuple] = None, anchors: bool = True,
                        max_angle: float = 90.0):
    """Source and target control points for rotating limbs about their elbows.

    ``angle`` (degrees) is a scalar or one value per selected limb.
    ``limb_mask`` lists limb indices to move (default: every fully visible
    limb); limbs with any invisible joint are dropped. With ``anchors`` set,
    the remaining visible keypoints and the four corners of ``frame =
    (width, height)`` are added as fixed points. Returns two ``(P, 2)``
    arrays, empty when no limb qualifies.
    """
    ok = set(visible_limbs(pose, skeleton))
    chosen = list(range(len(skeleton.limbs))) if limb_mask is None else list(limb_mask)
    angles = np.broadcast_to(np.asarray(angle, dtype=np.float64), (len(chosen),))
    if np.any(np.abs(angles) > max_angle):
        raise ParameterError(f"|angle| must not exceed {max_angle} degrees")
    moved = [(li, a) for li, a in zip(chosen, angles) if li in ok]
    if not moved:
        return np.zeros((0, 2)), np.zeros((0, 2))
    kp = pose.keypoints[:, :2]
    src, dst, moving = [], [], set()
    for li, a in moved:
        elbow, knee, paw = skeleton.limbs[li]
        pts = kp[[knee, paw]]
        src.extend(pts)
        dst.extend(rotate_about(pts, kp[elbow], a))
        moving.update((knee, paw))
    if anchors:
        for j in np.flatnonzero(pose.visible):
            if j not in moving:
                src.append(kp[j])
                dst.append(kp[j])
        if frame is not None:
            w, h = frame
            for c in ((0.0, 0.0), (w - 1.0, 0.0), (0.0, h - 1.0), (w - 1.0, h - 1.0)):
                src.append(np.array(c))
                dst.append(np.array(c))
    return _dedupe(np.array(src), np.array(dst))


def sample_limb_rotation(pose: PoseInstance, skeleton: Skeleton, rng: np.random.Generator,
                         max_angle: float = DEFAULT_MAX_ANGLE):
    """Draw limbs (Bernoulli 0.5, at least one) and uniform angles in ±max_angle.

    Returns ``(limb_indices, angles)``; both empty when no limb is fully visible.
    """
    limbs = visible_limbs(pose, skeleton)
    if not limbs:
        return [], np.zeros(0)
    pick = rng.random(len(limbs)) < 0.5
    if not pick.any():
        pick[int(rng.integers(len(limbs)))] = True
    chosen = [li for li, p in zip(limbs, pick) if p]
    angles = rng.uniform(-max_angle, max_angle, size=len(chosen))
    return chosen, angles
