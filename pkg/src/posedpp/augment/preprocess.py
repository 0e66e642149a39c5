"""Square cropping and the flip / rotate / noise augmentations."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ParameterError
from ..kernels import PoseInstance
from .image import ImageGrid, affine_inverse_map, warp_with
from .skeleton import ANIMAL_POSE, Skeleton

DEFAULT_OUT_SIZE = 512
AUGMENT_KINDS = ("flip", "rotate", "noise")


def square_box(bbox) -> tuple:
    """Integer ``(x0, y0, side)`` of the square sharing ``bbox``'s centre and longer side."""
    x, y, w, h = (float(b) for b in bbox)
    if not (w > 0 and h > 0):
        raise ParameterError(f"bbox must have positive area, got {bbox}")
    side = int(round(max(w, h)))
    side = max(side, 1)
    x0 = int(round(x + w / 2 - side / 2))
    y0 = int(round(y + h / 2 - side / 2))
    return x0, y0, side


def square_crop(img: ImageGrid, bbox, out_size: int = DEFAULT_OUT_SIZE,
                pose: Optional[PoseInstance] = None):
    """Crop the square around ``bbox`` (zero-padding beyond the image) and resize.

    Returns ``(crop, pose)`` where the pose, if given, has keypoints and bbox
    mapped into crop coordinates.
    """
    import cv2

    x0, y0, side = square_box(bbox)
    H, W = img.height, img.width
    bx, by, bw, bh = (float(b) for b in bbox)
    if bx >= W or by >= H or bx + bw <= 0 or by + bh <= 0:
        raise ParameterError("bbox does not overlap the image")
    canvas = np.zeros((side, side) + img.pixels.shape[2:])
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + side, W), min(y0 + side, H)
    canvas[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = img.pixels[sy0:sy1, sx0:sx1]
    if side != out_size:
        interp = cv2.INTER_AREA if side > out_size else cv2.INTER_LINEAR
        canvas = cv2.resize(canvas, (out_size, out_size), interpolation=interp)
    crop = ImageGrid(canvas)
    if pose is None:
        return crop, None
    s = out_size / side
    kp = pose.keypoints.copy()
    vis = kp[:, 2] > 0
    kp[vis, 0] = (kp[vis, 0] - x0) * s
    kp[vis, 1] = (kp[vis, 1] - y0) * s
    new_bbox = ((bx - x0) * s, (by - y0) * s, bw * s, bh * s)
    return crop, pose.with_keypoints(kp, bbox=new_bbox)


def _rotation_matrix(angle_deg: float, center) -> np.ndarray:
    t = np.deg2rad(angle_deg)
    c, s = np.cos(t), np.sin(t)
    cx, cy = center
    R = np.array([[c, -s], [s, c]])
    return np.column_stack([R, np.array([cx, cy]) - R @ np.array([cx, cy])])


def basic_augment(img: ImageGrid, pose: PoseInstance, kind: str, param: float = 0.0,
                  seed: int = 0, skeleton: Skeleton = ANIMAL_POSE):
    """Apply ``flip``, ``rotate`` (``param`` degrees about the image centre) or
    ``noise`` (Gaussian, ``param`` = standard deviation in intensity levels).
    """
    kp = pose.keypoints.copy()
    vis = kp[:, 2] > 0
    if kind == "flip":
        W = img.width
        out = ImageGrid(img.pixels[:, ::-1].copy(), img.valid[:, ::-1].copy())
        kp[vis, 0] = (W - 1) - kp[vis, 0]
        kp = kp[skeleton.flip_permutation()]
        bx, by, bw, bh = pose.bbox
        bbox = (W - bx - bw, by, bw, bh)
        return out, pose.with_keypoints(kp, bbox=bbox)
    if kind == "rotate":
        center = ((img.width - 1) / 2, (img.height - 1) / 2)
        M = _rotation_matrix(param, center)
        out = warp_with(img, affine_inverse_map(M))
        kp[vis, :2] = kp[vis, :2] @ M[:, :2].T + M[:, 2]
        return out, pose.with_keypoints(kp)
    if kind == "noise":
        if param < 0:
            raise ParameterError("noise sigma must be non-negative")
        if param == 0:
            return img.copy(), pose
        rng = np.random.default_rng(seed)
        noisy = img.pixels + rng.normal(0.0, param, img.pixels.shape)
        return ImageGrid(np.clip(noisy, 0.0, 255.0), img.valid.copy()), pose
    raise ParameterError(f"unknown augmentation {kind!r}; expected one of {AUGMENT_KINDS}")
