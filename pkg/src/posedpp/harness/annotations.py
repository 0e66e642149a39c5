"""COCO-style keypoint annotation IO."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import ParseError, PoseDPPError, SchemaError
from ..kernels import PoseInstance

ANIMAL_POSE_NUM_KEYPOINTS = 17


@dataclass
class Dataset:
    instances: list
    keypoint_names: tuple = ()
    categories: dict = field(default_factory=dict)  # label -> category id

    @property
    def by_class(self) -> dict:
        out: dict = {}
        for inst in self.instances:
            out.setdefault(inst.class_label, []).append(inst)
        return out

    @property
    def classes(self) -> list:
        return list(self.by_class)

    def counts(self) -> dict:
        return {c: len(v) for c, v in self.by_class.items()}

    def lookup(self) -> dict:
        return {inst.id: inst for inst in self.instances}

    def __len__(self) -> int:
        return len(self.instances)


def _keypoint_triples(raw, where: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: keypoints are not numeric") from exc
    if arr.ndim == 1:
        if arr.size % 3:
            raise SchemaError(f"{where}: {arr.size} keypoint values is not a multiple of 3")
        arr = arr.reshape(-1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise SchemaError(f"{where}: keypoints must be (x, y, v) triples")
    arr = arr.copy()
    arr[:, 2] = (arr[:, 2] > 0).astype(np.float64)
    return arr


def parse_annotations(doc: dict, num_keypoints: Optional[int] = ANIMAL_POSE_NUM_KEYPOINTS,
                      source: str = "<memory>") -> Dataset:
    if not isinstance(doc, dict) or "annotations" not in doc:
        raise ParseError(f"{source}: expected an object with an 'annotations' list")
    try:
        cats = {c["id"]: c for c in doc.get("categories", [])}
        images = {im["id"]: im for im in doc.get("images", [])}
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{source}: malformed categories/images: {exc!r}") from exc
    names: tuple = ()
    for c in cats.values():
        if c.get("keypoints"):
            names = tuple(c["keypoints"])
            break
    instances = []
    for n, ann in enumerate(doc["annotations"]):
        where = f"{source}: annotation #{n}"
        try:
            aid = ann["id"]
            where += f" (id={aid!r})"
            cat = ann["category_id"]
            label = cats[cat]["name"] if cat in cats else str(cat)
            kp = _keypoint_triples(ann["keypoints"], where)
            bbox = ann["bbox"]
            image = images.get(ann.get("image_id"), {})
            image_ref = image.get("file_name", ann.get("image_id"))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{where}: missing or malformed field {exc}") from exc
        if num_keypoints is not None and kp.shape[0] != num_keypoints:
            raise SchemaError(f"{where}: {kp.shape[0]} keypoints, expected {num_keypoints}")
        try:
            inst = PoseInstance(aid, label, kp, bbox,
                                None if image_ref is None else str(image_ref))
        except PoseDPPError as exc:
            raise ParseError(f"{where}: {exc}") from exc
        instances.append(inst)
    labels = {c["name"]: cid for cid, c in cats.items()}
    return Dataset(instances, names, labels)


def load_annotations(path, num_keypoints: Optional[int] = ANIMAL_POSE_NUM_KEYPOINTS) -> Dataset:
    """Read a COCO keypoint file into per-class :class:`PoseInstance` records.

    Visibility flags greater than zero (COCO's 1 and 2) become 1.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return parse_annotations(doc, num_keypoints, str(path))


def to_coco(instances: Iterable[PoseInstance], keypoint_names: Sequence[str] = (),
            categories: Optional[dict] = None) -> dict:
    instances = list(instances)
    categories = dict(categories or {})
    for inst in instances:
        if inst.class_label not in categories:
            categories[inst.class_label] = len(categories) + 1
    images: dict = {}
    anns = []
    for inst in instances:
        ref = inst.image_ref if inst.image_ref is not None else f"{inst.id}"
        if ref not in images:
            images[ref] = len(images) + 1
        anns.append({
            "id": inst.id,
            "image_id": images[ref],
            "category_id": categories[inst.class_label],
            "keypoints": [float(v) for v in inst.keypoints.reshape(-1)],
            "num_keypoints": int(inst.visible.sum()),
            "bbox": [float(b) for b in inst.bbox],
        })
    return {
        "images": [{"id": i, "file_name": ref} for ref, i in images.items()],
        "categories": [{"id": cid, "name": name, "keypoints": list(keypoint_names)}
                       for name, cid in categories.items()],
        "annotations": anns,
    }


def save_annotations(instances: Iterable[PoseInstance], path, keypoint_names: Sequence[str] = (),
                     categories: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_coco(instances, keypoint_names, categories), indent=1) + "\n")
    return path
