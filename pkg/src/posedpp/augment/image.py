"""Image container and backward warping."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..errors import ParseError, ShapeError
from .tps import ThinPlateTransform

# sample positions this far outside the pixel grid still count as inside
_EDGE_TOL = 1e-6
# positions this close to a pixel centre are sampled exactly at it
_SNAP_TOL = 1e-9


@dataclass
class ImageGrid:
    """``(H, W)`` or ``(H, W, C)`` float pixels on a 0-255 scale plus validity mask."""

    pixels: np.ndarray
    valid: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim not in (2, 3):
            raise ShapeError(f"image must be 2-D or 3-D, got shape {px.shape}")
        self.pixels = px
        if self.valid is None:
            self.valid = np.ones(px.shape[:2], dtype=bool)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != px.shape[:2]:
                raise ShapeError("mask shape does not match image")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    @property
    def invalid(self) -> np.ndarray:
        return ~self.valid

    def copy(self) -> "ImageGrid":
        return ImageGrid(self.pixels.copy(), self.valid.copy())

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)

    def masked_mean(self) -> np.ndarray:
        return self.pixels[self.valid].mean(axis=0)

    @classmethod
    def from_uint8(cls, arr) -> "ImageGrid":
        return cls(np.asarray(arr).astype(np.float64))


def read_image(path) -> ImageGrid:
    import cv2

    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ParseError(f"cannot read image {path}")
    return ImageGrid.from_uint8(arr)


def write_image(img: ImageGrid, path) -> Path:
    import cv2

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), img.to_uint8()):
        raise ParseError(f"cannot write image {path}")
    return path


def _snap(v: np.ndarray) -> np.ndarray:
    r = np.rint(v)
    return np.where(np.abs(v - r) <= _SNAP_TOL, r, v)


def sample_bilinear(img: ImageGrid, xs: np.ndarray, ys: np.ndarray):
    """Bilinearly sample ``img`` at float positions.

    Returns ``(values, inside)``. Positions outside the pixel grid, or whose
    support touches an invalid input pixel, yield zeros and ``inside=False``.
    """
    H, W = img.height, img.width
    xs = _snap(np.asarray(xs, dtype=np.float64))
    ys = _snap(np.asarray(ys, dtype=np.float64))
    inside = ((xs >= -_EDGE_TOL) & (xs <= W - 1 + _EDGE_TOL)
              & (ys >= -_EDGE_TOL) & (ys <= H - 1 + _EDGE_TOL))
    x = np.clip(xs, 0, W - 1)
    y = np.clip(ys, 0, H - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), max(W - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.intp), max(H - 2, 0))
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    fx = x - x0
    fy = y - y0
    px = img.pixels
    if px.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = px[y0, x0] * (1 - fx) + px[y0, x1] * fx
    bot = px[y1, x0] * (1 - fx) + px[y1, x1] * fx
    vals = top * (1 - fy) + bot * fy
    v = img.valid
    wx = x - x0
    wy = y - y0
    # an invalid neighbour only matters if it carries weight
    support = ((v[y0, x0] | ((1 - wx) * (1 - wy) == 0))
               & (v[y0, x1] | (wx * (1 - wy) == 0))
               & (v[y1, x0] | ((1 - wx) * wy == 0))
               & (v[y1, x1] | (wx * wy == 0)))
    ok = inside & support
    vals = np.where(ok[..., None] if px.ndim == 3 else ok, vals, 0.0)
    return vals, ok


def warp_with(img: ImageGrid, inverse_map: Callable[[np.ndarray], np.ndarray],
              out_shape: Optional[tuple] = None) -> ImageGrid:
    """Backward warp: output pixel ``p`` takes the input value at ``inverse_map(p)``."""
    H, W = out_shape if out_shape is not None else (img.height, img.width)
    yy, xx = np.mgrid[0:H, 0:W]
    grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
    srcpts = inverse_map(grid)
    vals, ok = sample_bilinear(img, srcpts[:, 0], srcpts[:, 1])
    shape = (H, W) + img.pixels.shape[2:]
    return ImageGrid(vals.reshape(shape), ok.reshape(H, W))


def warp_image(img: ImageGrid, T: ThinPlateTransform) -> ImageGrid:
    """Warp ``img`` so that content at ``T.control_src`` lands on ``T.control_dst``.

    Each output pixel is pulled from the inverse-mapped input location (the
    spline fitted from dst to src) by bilinear interpolation. Pixels whose
    source lies outside the input are marked invalid.
    """
    return warp_with(img, T.inverse())


def affine_inverse_map(matrix: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Inverse-map callable for a forward 2x3 affine transform."""
    M = np.vstack([np.asarray(matrix, dtype=np.float64), [0.0, 0.0, 1.0]])
    Minv = np.linalg.inv(M)

    def f(pts):
        return pts @ Minv[:2, :2].T + Minv[:2, 2]

    return f
