"""Incremental-schedule execution with manifests and diversity reports."""

from __future__ import annotations

import csv
import json
import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from ..augment.image import read_image, write_image
from ..augment.pipeline import warp_augment
from ..errors import ConfigError, ParseError
from ..kernels import flatten_poses
from ..memory import ExemplarMemory, SamplerStrategy, growing_update, update_memory, write_manifest
from .annotations import Dataset, save_annotations
from .metrics import diversity_report

# class order used for the single-base-class experiments
CLASS_ORDER = ("cat", "horse", "cow", "dog", "sheep")


@dataclass(frozen=True)
class AugmentConfig:
    copies: int = 1
    max_angle: float = 15.0
    radius: int = 3
    image_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "AugmentConfig":
        return cls(copies=int(d.get("copies", 1)), max_angle=float(d.get("max_angle", 15.0)),
                   radius=int(d.get("radius", 3)), image_dir=d.get("image_dir"))


@dataclass
class ExperimentSchedule:
    base_classes: list
    steps: list = field(default_factory=list)
    mode: str = "fixed"
    budget: int = 1000
    fraction: Optional[float] = None
    strategy: SamplerStrategy = field(default_factory=SamplerStrategy)
    augmentation: Optional[AugmentConfig] = None
    seed: int = 0

    def __post_init__(self):
        self.base_classes = list(self.base_classes)
        self.steps = [list(s) for s in self.steps]
        seen: set = set()
        for label in self.all_classes():
            if label in seen:
                raise ConfigError(f"class {label!r} is scheduled more than once")
            seen.add(label)
        if self.mode not in ("fixed", "growing"):
            raise ConfigError(f"unknown memory mode {self.mode!r}")
        if self.mode == "fixed" and self.budget <= 0:
            raise ConfigError("fixed memory needs a positive budget")
        if self.mode == "growing" and not (self.fraction and 0 < self.fraction <= 1):
            raise ConfigError("growing memory needs a fraction in (0, 1]")

    def all_classes(self) -> list:
        return self.base_classes + [c for s in self.steps for c in s]

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentSchedule":
        try:
            mem = d.get("memory", {})
            aug = d.get("augmentation")
            return cls(
                base_classes=d["base_classes"],
                steps=d.get("steps", []),
                mode=mem.get("mode", "fixed"),
                budget=int(mem.get("budget", 1000)),
                fraction=mem.get("fraction"),
                strategy=SamplerStrategy.from_dict(d.get("strategy", {})),
                augmentation=AugmentConfig.from_dict(aug) if aug else None,
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed schedule: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentSchedule":
        import yaml

        try:
            doc = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ParseError(f"cannot read schedule {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: schedule must be a mapping")
        return cls.from_dict(doc)


@dataclass
class StepReport:
    step: int
    classes_seen: list
    counts: dict
    diversity: dict
    wall_time: float
    manifest_path: Optional[str] = None
    augmented: int = 0

    def as_dict(self) -> dict:
        return {
            "step": self.step, "classes_seen": self.classes_seen, "counts": self.counts,
            "diversity": {c: d.as_dict() for c, d in self.diversity.items()},
            "wall_time": self.wall_time, "manifest_path": self.manifest_path,
            "augmented": self.augmented,
        }


def _stable_seed(*parts) -> int:
    return zlib.crc32("|".join(map(str, parts)).encode()) & 0x7FFFFFFF


def _augment_step(memory: ExemplarMemory, cfg: AugmentConfig, seed: int, step: int,
                  out_dir: Optional[Path]) -> list:
    records = []
    for label, ids in memory.per_class.items():
        for i in ids:
            inst = memory.store[i]
            img = None
            if cfg.image_dir and inst.image_ref:
                path = Path(cfg.image_dir) / inst.image_ref
                if path.exists():
                    img = read_image(path)
            for copy in range(cfg.copies):
                res = warp_augment(inst, img, seed=_stable_seed(seed, step, i, copy),
                                   max_angle=cfg.max_angle, radius=cfg.radius)
                if not res.applied:
                    continue
                new_id = f"{i}_aug{copy}"
                ref = f"step_{step:02d}/{new_id}.png"
                if res.image is not None and out_dir is not None:
                    write_image(res.image, out_dir / "augmented" / ref)
                records.append(res.pose.with_keypoints(res.pose.keypoints, id=new_id, image_ref=ref))
    return records


def run_schedule(dataset: Dataset, schedule: ExperimentSchedule,
                 out_dir=None) -> list:
    """Run the base stage and every incremental step, returning one report each.

    With ``out_dir`` set, writes ``manifests/step_XX.json``, ``metrics.csv``,
    ``series.csv``, ``reports.json`` and, when augmentation is configured,
    ``augmented/step_XX.json`` sidecar annotations (plus warped images when
    source images are available).
    """
    by_class = dataset.by_class
    missing = [c for c in schedule.all_classes() if c not in by_class]
    if missing:
        raise ConfigError(f"classes not in dataset: {missing}")
    out = Path(out_dir) if out_dir is not None else None
    strategy = replace(schedule.strategy, seed=schedule.seed)
    if schedule.mode == "fixed":
        memory = ExemplarMemory.fixed(schedule.budget, strategy)
    else:
        memory = ExemplarMemory.growing(schedule.fraction, strategy)
    kernel = "rbf"
    reports = []
    for step, group in enumerate([schedule.base_classes] + schedule.steps):
        t0 = time.perf_counter()
        new = {c: by_class[c] for c in group}
        if schedule.mode == "fixed":
            memory = update_memory(memory, new, strategy)
        else:
            memory = growing_update(memory, new, strategy=strategy)
        diversity = {}
        for label, ids in memory.per_class.items():
            if not ids:
                continue
            F = flatten_poses([memory.store[i] for i in ids], strategy.scaling)
            diversity[label] = diversity_report(F, range(len(ids)), kernel, strategy.gamma)
        manifest = None
        if out is not None:
            manifest = str(write_manifest(memory, out / "manifests" / f"step_{step:02d}.json"))
        n_aug = 0
        if schedule.augmentation is not None:
            recs = _augment_step(memory, schedule.augmentation, schedule.seed, step, out)
            n_aug = len(recs)
            if out is not None:
                save_annotations(recs, out / "augmented" / f"step_{step:02d}.json",
                                 dataset.keypoint_names, dataset.categories)
        reports.append(StepReport(step, list(memory.per_class), memory.counts(), diversity,
                                  time.perf_counter() - t0, manifest, n_aug))
    if out is not None:
        write_tables(reports, out)
    return reports


def write_tables(reports, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "class", "stored", "log_det", "mean_pairwise", "min_pairwise", "degenerate"])
        for r in reports:
            for label, n in r.counts.items():
                d = r.diversity.get(label)
                w.writerow([r.step, label, n] + ([d.log_det, d.mean_pairwise, d.min_pairwise,
                                                  int(d.degenerate)] if d else ["", "", "", ""]))
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "total_stored", "mean_log_det", "mean_pairwise", "min_pairwise"])
        for r in reports:
            ds = list(r.diversity.values())
            w.writerow([
                r.step, sum(r.counts.values()),
                float(np.mean([d.log_det for d in ds])) if ds else "",
                float(np.nanmean([d.mean_pairwise for d in ds])) if ds else "",
                float(np.nanmin([d.min_pairwise for d in ds])) if ds else "",
            ])
    (out / "reports.json").write_text(json.dumps([r.as_dict() for r in reports], indent=2) + "\n")
