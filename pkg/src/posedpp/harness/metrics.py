"""Evaluation utilities: PCK scoring, heatmap losses, subset diversity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ParameterError, ParseError, ShapeError
from ..kernels import KernelMatrix, PoseInstance, _features, build_kernel, pairwise_sq_dists
from ..memory import baseline_select

REFERENCES = ("max_side", "diagonal")
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class PCKResult:
    overall: float
    per_class: dict
    correct: int
    visible: int
    missing: int = 0
    per_class_counts: dict = field(default_factory=dict)


def _reference_length(bbox, reference: str) -> float:
    w, h = bbox[2], bbox[3]
    if reference == "max_side":
        return max(w, h)
    return math.hypot(w, h)


def pck_score(predictions: Mapping[Any, Any], ground_truth: Sequence[PoseInstance],
              tau: float = 0.05, reference: str = "max_side") -> PCKResult:
    """Fraction of visible keypoints predicted within ``tau`` × reference length.

    The reference length is ``max(bbox width, bbox height)`` by default.
    Instances without a prediction count every visible keypoint as wrong
    and are tallied in ``missing``.
    """
    if not tau > 0:
        raise ParameterError("tau must be positive")
    if reference not in REFERENCES:
        raise ParameterError(f"unknown reference {reference!r}")
    gt_ids = {inst.id for inst in ground_truth}
    unknown = [k for k in predictions if k not in gt_ids]
    if unknown:
        raise ParameterError(f"predictions for unknown ids: {unknown[:5]}")
    counts: dict = {}
    missing = 0
    for inst in ground_truth:
        vis = inst.visible
        c, v = counts.get(inst.class_label, (0, 0))
        nvis = int(vis.sum())
        if inst.id not in predictions:
            missing += 1
            counts[inst.class_label] = (c, v + nvis)
            continue
        pred = np.asarray(predictions[inst.id], dtype=np.float64)
        pred = pred.reshape(inst.num_keypoints, -1)[:, :2]
        err = np.linalg.norm(pred - inst.keypoints[:, :2], axis=1)
        thr = tau * _reference_length(inst.bbox, reference)
        ok = int(np.count_nonzero((err <= thr) & vis))
        counts[inst.class_label] = (c + ok, v + nvis)
    per_class = {k: (c / v if v else float("nan")) for k, (c, v) in counts.items()}
    correct = sum(c for c, _ in counts.values())
    visible = sum(v for _, v in counts.values())
    overall = correct / visible if visible else float("nan")
    return PCKResult(overall, per_class, correct, visible, missing, counts)


def load_predictions(path) -> dict:
    """Read ``[{"id": ..., "keypoints": [x, y, (v), ...]}, ...]`` into ``{id: array}``."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read predictions {path}: {exc}") from exc
    if isinstance(doc, dict):
        doc = doc.get("predictions", doc.get("annotations"))
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a list of prediction records")
    out = {}
    for n, rec in enumerate(doc):
        try:
            kp = np.asarray(rec["keypoints"], dtype=np.float64)
            out[rec["id"]] = kp.reshape(-1, 3)[:, :2] if kp.size % 3 == 0 else kp.reshape(-1, 2)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: prediction #{n}: {exc!r}") from exc
    return out


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - b) ** 2))


def distillation_loss(student, teacher, gt, alpha: float = 0.5) -> float:
    """``alpha · MSE(student, teacher) + (1 - alpha) · MSE(student, gt)``."""
    s = np.asarray(student, dtype=np.float64)
    t = np.asarray(teacher, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if not (s.shape == t.shape == g.shape):
        raise ShapeError(f"heatmap shapes differ: {s.shape}, {t.shape}, {g.shape}")
    if not 0 <= alpha <= 1:
        raise ParameterError("alpha must lie in [0, 1]")
    return alpha * _mse(s, t) + (1 - alpha) * _mse(s, g)


def icarl_loss(student_old, teacher_old, student_new, gt_new, alpha: float = 0.5) -> float:
    """Distillation on exemplars plus supervised MSE on new-class data."""
    so, to = np.asarray(student_old, float), np.asarray(teacher_old, float)
    sn, gn = np.asarray(student_new, float), np.asarray(gt_new, float)
    if so.shape != to.shape or sn.shape != gn.shape:
        raise ShapeError("student/teacher or student/gt shapes differ")
    if not 0 <= alpha <= 1:
        raise ParameterError("alpha must lie in [0, 1]")
    return alpha * _mse(so, to) + (1 - alpha) * _mse(sn, gn)


def eeil_balanced_loss(old: tuple, new: tuple, alpha: float = 0.5) -> float:
    """Balanced-finetuning loss; ``old`` and ``new`` are (student, teacher, gt) triples."""
    return distillation_loss(*old, alpha=alpha) + distillation_loss(*new, alpha=alpha)


def eeil_balanced_subset(instances: Sequence[PoseInstance], n: int, scaling: str = "bbox") -> list:
    """Herding-ranked ``n`` ids of a new class for the balanced-finetuning set."""
    return baseline_select(instances, n, "herding", scaling=scaling)


@dataclass(frozen=True)
class DiversityReport:
    size: int
    log_det: float
    mean_pairwise: float
    min_pairwise: float
    degenerate: bool

    def as_dict(self) -> dict:
        return {"size": self.size, "log_det": self.log_det, "mean_pairwise": self.mean_pairwise,
                "min_pairwise": self.min_pairwise, "degenerate": self.degenerate}


def diversity_report(F, selection: Sequence[int], kernel="rbf", gamma: float = 50.0) -> DiversityReport:
    """Log-det and pairwise-distance summary of ``selection`` within ``F``.

    ``kernel`` is ``"rbf"``, ``"linear"`` or a precomputed :class:`KernelMatrix`
    over the same rows. A submatrix whose smallest eigenvalue is below
    ``1e-10`` × its largest diagonal entry is flagged degenerate and gets
    ``log_det = -inf``.
    """
    idx = np.asarray(list(selection), dtype=np.intp)
    if idx.size == 0:
        raise ParameterError("selection is empty")
    X = _features(F)
    if idx.min() < 0 or idx.max() >= X.shape[0]:
        raise ParameterError("selection index out of range")
    Xs = X[idx]
    if isinstance(kernel, KernelMatrix):
        Ks = kernel.submatrix(idx)
    else:
        Ks = build_kernel(Xs, kernel, gamma).data
    D = np.sqrt(pairwise_sq_dists(Xs))
    iu = np.triu_indices(idx.size, k=1)
    pair = D[iu]
    mean_pw = float(pair.mean()) if pair.size else float("nan")
    min_pw = float(pair.min()) if pair.size else float("nan")
    eig = np.linalg.eigvalsh(Ks)
    top = max(float(np.max(np.diag(Ks))), 0.0)
    degenerate = bool(eig[0] <= DEGENERATE_TOL * top) or top == 0.0
    if degenerate:
        log_det = -math.inf
    else:
        log_det = float(np.linalg.slogdet(Ks)[1])
    return DiversityReport(int(idx.size), log_det, mean_pw, min_pw, degenerate)
