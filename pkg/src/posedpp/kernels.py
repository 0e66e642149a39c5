"""Pose records and the L-ensemble kernels built from their flattened features."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

SCALINGS = ("pixel", "bbox")
KERNEL_KINDS = ("linear", "rbf")

DEFAULT_RANK_TOL = 1e-10

# rows per block when forming pairwise squared distances
_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class PoseInstance:
    """One annotated animal crop.

    ``keypoints`` is a ``(J, 3)`` float array of ``(x, y, v)`` with ``v`` in
    ``{0, 1}``. ``bbox`` is ``(x, y, width, height)`` in pixels.
    """

    id: Any
    class_label: str
    keypoints: np.ndarray
    bbox: tuple
    image_ref: Optional[str] = None

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=np.float64)
        if kp.ndim == 1 and kp.size % 3 == 0:
            kp = kp.reshape(-1, 3)
        if kp.ndim != 2 or kp.shape[1] != 3:
            raise ShapeError(f"instance {self.id!r}: keypoints must be (J, 3), got {kp.shape}")
        vis = kp[:, 2]
        if not np.all((vis == 0) | (vis == 1)):
            raise ParameterError(f"instance {self.id!r}: visibility must be 0 or 1")
        kp.setflags(write=False)
        object.__setattr__(self, "keypoints", kp)
        bbox = tuple(float(b) for b in self.bbox)
        if len(bbox) != 4:
            raise ShapeError(f"instance {self.id!r}: bbox must have 4 entries")
        if not (bbox[2] > 0 and bbox[3] > 0):
            raise ParameterError(f"instance {self.id!r}: bbox width and height must be positive")
        object.__setattr__(self, "bbox", bbox)

    @property
    def num_keypoints(self) -> int:
        return self.keypoints.shape[0]

    @property
    def visible(self) -> np.ndarray:
        return self.keypoints[:, 2] > 0

    def with_keypoints(self, keypoints, bbox=None, id=None, image_ref=None) -> "PoseInstance":
        return PoseInstance(
            id=self.id if id is None else id,
            class_label=self.class_label,
            keypoints=keypoints,
            bbox=self.bbox if bbox is None else bbox,
            image_ref=self.image_ref if image_ref is None else image_ref,
        )


@dataclass(frozen=True)
class FeatureMatrix:
    """``(N, 3J)`` matrix whose row ``i`` is the flattened pose of instance ``i``."""

    data: np.ndarray
    scaling: str = "bbox"
    ids: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def num_keypoints(self) -> int:
        return self.dim // 3

    def subset(self, indices: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        ids = tuple(self.ids[i] for i in idx) if self.ids else ()
        return FeatureMatrix(self.data[idx], self.scaling, ids)


@dataclass(frozen=True)
class KernelMatrix:
    data: np.ndarray
    kind: str = "linear"
    gamma: Optional[float] = None

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def submatrix(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.intp)
        return self.data[np.ix_(idx, idx)]


def as_kernel(K) -> KernelMatrix:
    if isinstance(K, KernelMatrix):
        return K
    arr = np.asarray(K, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"kernel must be square, got shape {arr.shape}")
    return KernelMatrix(arr, kind="precomputed")


def flatten_poses(instances: Sequence[PoseInstance], scaling: str = "bbox",
                  mask_invisible: bool = True) -> FeatureMatrix:
    """Stack poses into an ``(N, 3J)`` feature matrix.

    With ``scaling="bbox"`` coordinates are expressed relative to the
    instance bounding box and clipped to ``[0, 1]``. When ``mask_invisible``
    is set, the coordinates of keypoints with ``v = 0`` are zeroed so that
    unlabeled positions never contribute to distances.
    """
    if scaling not in SCALINGS:
        raise ParameterError(f"unknown scaling {scaling!r}; expected one of {SCALINGS}")
    if len(instances) == 0:
        raise ShapeError("cannot flatten an empty instance list")
    J = instances[0].num_keypoints
    rows = np.empty((len(instances), 3 * J), dtype=np.float64)
    for i, inst in enumerate(instances):
        if inst.num_keypoints != J:
            raise ShapeError(
                f"instance {inst.id!r} has {inst.num_keypoints} keypoints, expected {J}")
        kp = inst.keypoints.copy()
        if scaling == "bbox":
            bx, by, bw, bh = inst.bbox
            kp[:, 0] = np.clip((kp[:, 0] - bx) / bw, 0.0, 1.0)
            kp[:, 1] = np.clip((kp[:, 1] - by) / bh, 0.0, 1.0)
        if mask_invisible:
            kp[kp[:, 2] == 0, :2] = 0.0
        rows[i] = kp.reshape(-1)
    return FeatureMatrix(rows, scaling, tuple(inst.id for inst in instances))


def _features(F) -> np.ndarray:
    if isinstance(F, FeatureMatrix):
        return F.data
    arr = np.asarray(F, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {arr.shape}")
    return arr


def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    """Exact pairwise squared Euclidean distances.

    Differences are formed explicitly (no Gram-matrix expansion) so the
    result is exactly symmetric with an exactly zero diagonal.
    """
    n, d = X.shape
    out = np.empty((n, n), dtype=np.float64)
    step = max(1, _BLOCK_ELEMS // max(1, n * d))
    for lo in range(0, n, step):
        diff = X[lo:lo + step, None, :] - X[None, :, :]
        out[lo:lo + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def build_kernel(F, kind: str = "rbf", gamma: float = 50.0) -> KernelMatrix:
    """Linear (``F Fᵀ``) or RBF (``exp(-γ‖xᵢ - xⱼ‖²)``) kernel over the rows of F."""
    X = _features(F)
    if X.shape[0] < 1:
        raise ShapeError("kernel needs at least one row")
    if not np.all(np.isfinite(X)):
        raise NumericError("features contain non-finite values")
    if kind == "linear":
        K = X @ X.T
        K = 0.5 * (K + K.T)
        return KernelMatrix(K, "linear")
    if kind == "rbf":
        gamma = float(gamma)
        if not gamma >= 0:
            raise ParameterError(f"rbf gamma must be >= 0, got {gamma}")
        K = np.exp(-gamma * pairwise_sq_dists(X))
        return KernelMatrix(K, "rbf", gamma)
    raise ParameterError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def numerical_rank(K, tol: float = DEFAULT_RANK_TOL) -> int:
    """Count eigenvalues above ``tol`` times the largest eigenvalue."""
    if not tol > 0:
        raise ParameterError("rank tolerance must be positive")
    A = as_kernel(K).data
    if A.size == 0:
        return 0
    if not np.all(np.isfinite(A)):
        raise NumericError("kernel contains non-finite entries")
    w = np.linalg.eigvalsh(A)
    top = w[-1]
    if top <= 0:
        return 0
    return int(np.count_nonzero(w > tol * top))


def check_kernel(K, sym_tol: float = 1e-12, psd_tol: float = 1e-8) -> None:
    """Raise :class:`NumericError` if ``K`` is not symmetric PSD within tolerance."""
    K = as_kernel(K)
    A = K.data
    if not np.all(np.isfinite(A)):
        raise NumericError("kernel contains non-finite entries")
    asym = np.abs(A - A.T)
    if np.any(asym > sym_tol * np.maximum(1.0, np.abs(A))):
        raise NumericError("kernel is not symmetric")
    n = A.shape[0]
    floor = -psd_tol * n * max(float(np.max(np.diag(A))), 0.0)
    if n and np.linalg.eigvalsh(A)[0] < floor:
        raise NumericError("kernel is not positive semi-definite")
    if K.kind == "rbf" and not np.all(np.diag(A) == 1.0):
        raise NumericError("rbf kernel diagonal must be exactly one")
