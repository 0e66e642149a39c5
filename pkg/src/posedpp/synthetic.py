"""Synthetic pose datasets for tests and demos."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .kernels import PoseInstance

ANIMAL_CLASSES = ("cat", "dog", "cow", "horse", "sheep")


def blob_poses(n: int, num_keypoints: int = 17, blobs: int = 3, spread: float = 0.04,
               seed: int = 0, label: str = "cat", box: float = 128.0, id_prefix: str = "",
               visibility: float = 0.85, return_labels: bool = False):
    """``n`` poses drawn around ``blobs`` random prototype poses.

    Coordinates are prototype positions (uniform inside the box) plus
    Gaussian jitter of ``spread`` box-widths; each keypoint is visible with
    probability ``visibility``. Every instance gets the bbox ``(0, 0, box, box)``.
    """
    rng = np.random.default_rng(seed)
    protos = rng.uniform(0.1, 0.9, size=(blobs, num_keypoints, 2))
    which = rng.integers(blobs, size=n)
    out = []
    for i in range(n):
        xy = protos[which[i]] + rng.normal(0.0, spread, size=(num_keypoints, 2))
        xy = np.clip(xy, 0.0, 1.0) * box
        v = (rng.random(num_keypoints) < visibility).astype(float)
        kp = np.column_stack([xy, v])
        out.append(PoseInstance(f"{id_prefix}{i}", label, kp, (0.0, 0.0, box, box),
                                f"{label}/{id_prefix}{i}.png"))
    return (out, which) if return_labels else out


def uniform_poses(n: int, num_keypoints: int = 17, seed: int = 0, label: str = "cat",
                  box: float = 128.0) -> list:
    """Generic poses: uniform coordinates and random visibility."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        xy = rng.uniform(0.0, box, size=(num_keypoints, 2))
        v = rng.integers(0, 2, size=num_keypoints).astype(float)
        out.append(PoseInstance(i, label, np.column_stack([xy, v]), (0.0, 0.0, box, box)))
    return out


def synthetic_dataset(classes: Sequence[str] = ANIMAL_CLASSES, per_class: int = 10,
                      num_keypoints: int = 17, seed: int = 0, blobs: int = 3) -> list:
    """Instances for several classes with globally unique integer ids."""
    out = []
    next_id = 1
    for c, label in enumerate(classes):
        poses = blob_poses(per_class, num_keypoints, blobs, seed=seed * 1000 + c, label=label)
        for p in poses:
            out.append(PoseInstance(next_id, label, p.keypoints, p.bbox, f"{label}_{next_id:05d}.png"))
            next_id += 1
    return out
