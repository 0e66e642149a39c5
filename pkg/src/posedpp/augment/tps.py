"""Thin-plate spline fitting and evaluation in 2-D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateGeometryError, ParameterError


def tps_radial(r2: np.ndarray) -> np.ndarray:
    """``U = r² log r²`` evaluated from squared radii, with ``U(0) = 0``."""
    r2 = np.asarray(r2, dtype=np.float64)
    out = np.zeros_like(r2)
    pos = r2 > 0
    out[pos] = r2[pos] * np.log(r2[pos])
    return out


def _sq_dist(a, b):
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


@dataclass(frozen=True)
class ThinPlateTransform:
    """Map ``f(p) = a0 + a1 x + a2 y + Σ wᵢ U(|p - srcᵢ|)`` per output axis.

    ``affine`` is ``(3, 2)`` with rows (constant, x, y); ``bending_weights``
    is ``(P, 2)``.
    """

    control_src: np.ndarray
    control_dst: np.ndarray
    affine: np.ndarray
    bending_weights: np.ndarray
    regularization: float = 0.0

    def __call__(self, points, chunk: int = 65536) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        out = np.empty_like(pts)
        for lo in range(0, len(pts), chunk):
            p = pts[lo:lo + chunk]
            U = tps_radial(_sq_dist(p, self.control_src))
            out[lo:lo + chunk] = (self.affine[0] + p @ self.affine[1:]) + U @ self.bending_weights
        return out

    def inverse(self) -> "ThinPlateTransform":
        """Spline fitted with source and target control points swapped."""
        return tps_fit(self.control_dst, self.control_src, self.regularization)

    def side_conditions(self) -> np.ndarray:
        """``[Σw, Σw x, Σw y]`` per output axis; zero for a valid fit."""
        P = np.column_stack([np.ones(len(self.control_src)), self.control_src])
        return P.T @ self.bending_weights


def tps_fit(src, dst, lam: float = 0.0) -> ThinPlateTransform:
    """Solve the TPS interpolation system mapping ``src`` onto ``dst``.

    With ``lam = 0`` the map interpolates exactly; ``lam > 0`` adds ridge
    smoothing to the radial block.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if src.shape != dst.shape:
        raise ParameterError("src and dst must have the same number of points")
    if not lam >= 0:
        raise ParameterError("regularization must be non-negative")
    p = len(src)
    if p < 3:
        raise DegenerateGeometryError("need at least 3 control points")
    D = _sq_dist(src, src)
    off = D[~np.eye(p, dtype=bool)]
    span = float(np.max(D)) if p else 0.0
    if off.size and np.min(off) <= 1e-18 * max(span, 1.0):
        raise DegenerateGeometryError("duplicate control points")
    P = np.column_stack([np.ones(p), src])
    centered = src - src.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateGeometryError("control points are collinear")
    A = np.zeros((p + 3, p + 3))
    A[:p, :p] = tps_radial(D) + lam * np.eye(p)
    A[:p, p:] = P
    A[p:, :p] = P.T
    rhs = np.zeros((p + 3, 2))
    rhs[:p] = dst
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(f"singular TPS system: {exc}") from exc
    return ThinPlateTransform(src, dst, sol[p:], sol[:p], float(lam))
