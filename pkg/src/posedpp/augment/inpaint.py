"""Fast-marching hole filling after Telea (2004).

Pixels are filled in order of increasing distance ``T`` from the hole
boundary. Each one becomes a normalized weighted average of first-order
extrapolations ``I(q) + ∇I(q)·(p - q)`` from already-known pixels ``q``
within ``radius``. The weight of ``q`` is the product of its alignment with
``∇T``, ``1 / |p - q|²`` and ``1 / (1 + |T(p) - T(q)|)``.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from ..errors import CannotInpaintError, ParameterError
from .image import ImageGrid

KNOWN, BAND, INSIDE = 0, 1, 2
_FAR = 1e6
_DIR_FLOOR = 1e-6


def _solve(T, flag, i1, j1, i2, j2):
    # upwind eikonal update from the two neighbours (i1, j1), (i2, j2)
    H, W = flag.shape
    k1 = 0 <= i1 < H and 0 <= j1 < W and flag[i1, j1] == KNOWN
    k2 = 0 <= i2 < H and 0 <= j2 < W and flag[i2, j2] == KNOWN
    if k1 and k2:
        t1, t2 = T[i1, j1], T[i2, j2]
        d = 2.0 - (t1 - t2) ** 2
        if d < 0:
            return min(t1, t2) + 1.0
        r = math.sqrt(d)
        s = (t1 + t2 - r) / 2
        if s >= t1 and s >= t2:
            return s
        s += r
        if s >= t1 and s >= t2:
            return s
        return _FAR
    if k1:
        return 1.0 + T[i1, j1]
    if k2:
        return 1.0 + T[i2, j2]
    return _FAR


def _grad(T, flag, i, j, H, W):
    def known(a, b):
        return 0 <= a < H and 0 <= b < W and flag[a, b] != INSIDE

    if known(i, j + 1) and known(i, j - 1):
        gx = (T[i, j + 1] - T[i, j - 1]) * 0.5
    elif known(i, j + 1):
        gx = T[i, j + 1] - T[i, j]
    elif known(i, j - 1):
        gx = T[i, j] - T[i, j - 1]
    else:
        gx = 0.0
    if known(i + 1, j) and known(i - 1, j):
        gy = (T[i + 1, j] - T[i - 1, j]) * 0.5
    elif known(i + 1, j):
        gy = T[i + 1, j] - T[i, j]
    elif known(i - 1, j):
        gy = T[i, j] - T[i - 1, j]
    else:
        gy = 0.0
    return gx, gy


def _fill(px, T, flag, i, j, radius, H, W):
    i0, i1 = max(0, i - radius), min(H, i + radius + 1)
    j0, j1 = max(0, j - radius), min(W, j + radius + 1)
    ky, kx = np.mgrid[i0:i1, j0:j1]
    ry = (i - ky).astype(np.float64)
    rx = (j - kx).astype(np.float64)
    d2 = rx * rx + ry * ry
    use = (flag[i0:i1, j0:j1] != INSIDE) & (d2 > 0) & (d2 <= radius * radius)
    if not use.any():
        return False
    gx, gy = _grad(T, flag, i, j, H, W)
    gn = math.hypot(gx, gy)
    dist = np.sqrt(d2[use])
    if gn > 0:
        direction = np.abs(rx[use] * gx + ry[use] * gy) / (dist * gn)
        direction = np.maximum(direction, _DIR_FLOOR)
    else:
        direction = np.ones_like(dist)
    level = 1.0 / (1.0 + np.abs(T[i0:i1, j0:j1][use] - T[i, j]))
    w = direction * level / d2[use]
    vals = px[i0:i1, j0:j1][use]
    # first-order extrapolation from each neighbour towards (i, j)
    gy, gx = _image_grad(px, flag, ky[use], kx[use], H, W)
    if vals.ndim == 2:
        vals = vals + gx * rx[use][:, None] + gy * ry[use][:, None]
        px[i, j] = (w[:, None] * vals).sum(axis=0) / w.sum()
    else:
        vals = vals + gx * rx[use] + gy * ry[use]
        px[i, j] = (w * vals).sum() / w.sum()
    return True


def _image_grad(px, flag, ys, xs, H, W):
    """Finite-difference image gradient at known pixels from known neighbours only.

    Tries a one-pixel stencil first (central, then one-sided) and falls back
    to a two-pixel one where no direct neighbour along an axis is known.
    """
    c = px[ys, xs]

    def side(dy, dx):
        y, x = ys + dy, xs + dx
        ok = (y >= 0) & (y < H) & (x >= 0) & (x < W)
        y, x = np.where(ok, y, ys), np.where(ok, x, xs)
        ok &= flag[y, x] != INSIDE
        return (ok[:, None] if px.ndim == 3 else ok), px[y, x]

    def axis(dy, dx):
        g = np.zeros_like(c)
        done = np.zeros(g.shape, dtype=bool)
        for step in (1, 2):
            ok_a, a = side(dy * step, dx * step)
            ok_b, b = side(-dy * step, -dx * step)
            est = np.where(ok_a & ok_b, (a - b) * 0.5,
                           np.where(ok_a, a - c, np.where(ok_b, c - b, 0.0))) / step
            g = np.where(done, g, est)
            done |= ok_a | ok_b
        return g

    return axis(1, 0), axis(0, 1)


def inpaint_telea(img: ImageGrid, radius: int = 3) -> ImageGrid:
    """Fill every invalid pixel of ``img``; the result has an all-valid mask."""
    if radius < 1:
        raise ParameterError("inpainting radius must be at least 1 pixel")
    hole = img.invalid
    px = img.pixels.copy()
    H, W = hole.shape
    if not hole.any():
        return ImageGrid(px)
    if hole.all():
        raise CannotInpaintError("image has no valid pixel to propagate from")
    flag = np.where(hole, INSIDE, KNOWN).astype(np.int8)
    T = np.where(hole, _FAR, 0.0)
    px[hole] = 0.0
    heap = []
    near = np.zeros_like(hole)
    near[1:] |= hole[:-1]
    near[:-1] |= hole[1:]
    near[:, 1:] |= hole[:, :-1]
    near[:, :-1] |= hole[:, 1:]
    for i, j in zip(*np.nonzero(near & ~hole)):
        flag[i, j] = BAND
        heap.append((0.0, int(i), int(j)))
    heapq.heapify(heap)
    while heap:
        _, i, j = heapq.heappop(heap)
        if flag[i, j] == KNOWN:
            continue
        flag[i, j] = KNOWN
        for k, l in ((i - 1, j), (i, j - 1), (i + 1, j), (i, j + 1)):
            if not (0 <= k < H and 0 <= l < W) or flag[k, l] != INSIDE:
                continue
            t = _FAR
            for a in (k - 1, k + 1):
                for d in (l - 1, l + 1):
                    t = min(t, _solve(T, flag, a, l, k, d))
            T[k, l] = t
            # filled while still INSIDE so its placeholder value never feeds a gradient
            _fill(px, T, flag, k, l, radius, H, W)
            flag[k, l] = BAND
            heapq.heappush(heap, (t, k, l))
    return ImageGrid(px)
