"""Gaussian keypoint heatmaps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..kernels import PoseInstance

DEFAULT_SIGMA = 2.0
NORMALIZATIONS = ("gaussian", "unit-peak")


@dataclass(frozen=True)
class Heatmap:
    values: np.ndarray  # (height, width)
    keypoint: tuple
    sigma: float
    in_bounds: bool

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def argmax(self) -> tuple:
        r, c = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(c), int(r)


def gaussian_heatmap(keypoint, dims, sigma: float = DEFAULT_SIGMA,
                     normalization: str = "gaussian") -> Heatmap:
    """Render a Gaussian centred on ``keypoint = (x, y)`` over a ``dims = (w, h)`` grid.

    ``gaussian`` scaling uses the ``1/sqrt(2πσ²)`` prefactor (peak ≈ 0.1995 at
    σ = 2); ``unit-peak`` scales the same shape to a maximum of one.
    Keypoints outside the grid still render their tail and are flagged.
    """
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if normalization not in NORMALIZATIONS:
        raise ParameterError(f"unknown normalization {normalization!r}")
    w, h = int(dims[0]), int(dims[1])
    x, y = float(keypoint[0]), float(keypoint[1])
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    gx = np.exp(-((xs - x) ** 2) / (2 * sigma**2))
    gy = np.exp(-((ys - y) ** 2) / (2 * sigma**2))
    values = np.outer(gy, gx)
    if normalization == "gaussian":
        values *= 1.0 / math.sqrt(2 * math.pi * sigma**2)
    in_bounds = -0.5 <= x < w - 0.5 and -0.5 <= y < h - 0.5
    return Heatmap(values, (x, y), float(sigma), in_bounds)


def pose_heatmaps(pose: PoseInstance, dims, stride: float = 1.0, sigma: float = DEFAULT_SIGMA,
                  normalization: str = "gaussian") -> np.ndarray:
    """``(J, h, w)`` stack; invisible keypoints give all-zero maps.

    ``stride`` divides image coordinates to reach heatmap coordinates
    (e.g. 4 for a 512 input with 128 heatmaps).
    """
    w, h = int(dims[0]), int(dims[1])
    out = np.zeros((pose.num_keypoints, h, w))
    for j, (x, y, v) in enumerate(pose.keypoints):
        if v > 0:
            out[j] = gaussian_heatmap((x / stride, y / stride), dims, sigma, normalization).values
    return out
