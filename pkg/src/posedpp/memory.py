"""Fixed-budget rehearsal memory and exemplar samplers."""

from __future__ import annotations

import copy
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .cluster import clustered_kdpp_select
from .dpp import greedy_with_fill
from .errors import IntegrityError, ParameterError, ParseError, RankFallbackWarning
from .kernels import SCALINGS, PoseInstance, build_kernel, flatten_poses

STRATEGIES = ("rbf_kdpp", "clustered_kdpp", "random", "herding", "reservoir", "greedy_balanced")
BASELINES = ("random", "herding", "reservoir", "greedy_balanced")
MODES = ("fixed", "growing")

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SamplerStrategy:
    kind: str = "rbf_kdpp"
    gamma: float = 50.0
    seed: int = 0
    scaling: str = "bbox"

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.scaling not in SCALINGS:
            raise ParameterError(f"unknown scaling {self.scaling!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "seed": self.seed, "scaling": self.scaling}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SamplerStrategy":
        return cls(kind=d.get("kind", "rbf_kdpp"), gamma=float(d.get("gamma", 50.0)),
                   seed=int(d.get("seed", 0)), scaling=d.get("scaling", "bbox"))


class ExemplarSelection(NamedTuple):
    ids: list
    rank_fallback: bool = False


def per_class_quota(budget: int, classes_seen: int) -> int:
    """Exemplars per class: ``floor(budget / classes_seen)``."""
    if classes_seen < 1:
        raise ParameterError("classes_seen must be at least 1")
    if budget < 0:
        raise ParameterError("budget must be non-negative")
    return budget // classes_seen


def _herding_order(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    dist = np.linalg.norm(X - mean, axis=1)
    return np.lexsort((np.arange(len(X)), dist))


def baseline_select(instances: Sequence[PoseInstance], n: int, kind: str, seed: int = 0,
                    scaling: str = "bbox") -> list:
    """Non-DPP samplers over one class.

    * ``random``: uniform without replacement, returned in stream order.
    * ``herding``: ascending distance of the flattened pose from the class
      mean pose; ties by lowest index.
    * ``reservoir``: streaming reservoir of size ``n`` (Algorithm R).
    * ``greedy_balanced``: the first ``n`` items of the stream.
    """
    if kind not in BASELINES:
        raise ParameterError(f"unknown baseline {kind!r}; expected one of {BASELINES}")
    if n < 0:
        raise ParameterError("n must be non-negative")
    N = len(instances)
    if n >= N:
        return [inst.id for inst in instances]
    if n == 0:
        return []
    if kind == "random":
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(N, size=n, replace=False))
    elif kind == "herding":
        X = flatten_poses(instances, scaling).data
        idx = _herding_order(X)[:n]
    elif kind == "reservoir":
        rng = np.random.default_rng(seed)
        res = list(range(n))
        for i in range(n, N):
            j = int(rng.integers(0, i + 1))
            if j < n:
                res[j] = i
        idx = res
    else:
        idx = range(n)
    return [instances[i].id for i in idx]


def select_exemplars(instances: Sequence[PoseInstance], n: int,
                     strategy: SamplerStrategy) -> ExemplarSelection:
    """Pick ``n`` exemplar ids from one class with the given strategy.

    For ``rbf_kdpp`` a kernel with too little numerical rank yields as many
    greedy picks as the rank allows followed by the lowest unused indices;
    the result then has ``rank_fallback`` set.
    """
    N = len(instances)
    if n < 0:
        raise ParameterError("n must be non-negative")
    if n >= N:
        return ExemplarSelection([inst.id for inst in instances])
    if n == 0:
        return ExemplarSelection([])
    kind = strategy.kind
    if kind in BASELINES:
        return ExemplarSelection(baseline_select(instances, n, kind, strategy.seed, strategy.scaling))
    F = flatten_poses(instances, strategy.scaling)
    if kind == "clustered_kdpp":
        idx = clustered_kdpp_select(F, n, strategy.seed)
        return ExemplarSelection([instances[i].id for i in idx])
    K = build_kernel(F, "rbf", strategy.gamma)
    idx, filled = greedy_with_fill(K, n)
    if filled:
        warnings.warn(f"rbf kernel rank exhausted; {filled} of {n} exemplars filled by index",
                      RankFallbackWarning, stacklevel=2)
    return ExemplarSelection([instances[i].id for i in idx], bool(filled))


@dataclass
class ExemplarMemory:
    """Per-class exemplar ids under a global budget.

    ``budget`` is the fixed capacity Γ; growing mode uses ``budget = 0`` and
    a per-class ``fraction`` instead. ``store`` caches the instances behind
    stored ids so later updates can re-run selectors over them; it is not
    part of the manifest.
    """

    budget: int = 0
    mode: str = "fixed"
    fraction: Optional[float] = None
    per_class: dict = field(default_factory=dict)
    tombstones: set = field(default_factory=set)
    step: int = -1
    strategy: Optional[SamplerStrategy] = None
    store: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown memory mode {self.mode!r}")
        if self.mode == "fixed" and self.budget <= 0:
            raise ParameterError("fixed memory needs a positive budget")
        if self.mode == "growing":
            _check_fraction(self.fraction)

    @classmethod
    def fixed(cls, budget: int, strategy: Optional[SamplerStrategy] = None) -> "ExemplarMemory":
        return cls(budget=budget, mode="fixed", strategy=strategy)

    @classmethod
    def growing(cls, fraction: float, strategy: Optional[SamplerStrategy] = None) -> "ExemplarMemory":
        return cls(budget=0, mode="growing", fraction=fraction, strategy=strategy)

    @property
    def classes(self) -> list:
        return list(self.per_class)

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.per_class.values())

    def counts(self) -> dict:
        return {c: len(v) for c, v in self.per_class.items()}

    def quota(self) -> Optional[int]:
        if self.mode != "fixed" or not self.per_class:
            return None
        return per_class_quota(self.budget, len(self.per_class))

    def stored_ids(self) -> set:
        return {i for ids in self.per_class.values() for i in ids}

    def check_invariants(self) -> None:
        seen: set = set()
        for label, ids in self.per_class.items():
            for i in ids:
                if i in seen:
                    raise IntegrityError(f"id {i!r} stored twice")
                seen.add(i)
            if self.mode == "fixed" and len(ids) > self.quota():
                raise IntegrityError(f"class {label!r} holds {len(ids)} > quota {self.quota()}")
        if self.mode == "fixed" and len(seen) > self.budget:
            raise IntegrityError(f"{len(seen)} exemplars exceed budget {self.budget}")
        clash = seen & self.tombstones
        if clash:
            raise IntegrityError(f"tombstoned ids are stored: {sorted(map(str, clash))[:5]}")

    def copy(self) -> "ExemplarMemory":
        out = copy.copy(self)
        out.per_class = {c: list(v) for c, v in self.per_class.items()}
        out.tombstones = set(self.tombstones)
        out.store = dict(self.store)
        return out


def _check_fraction(fraction):
    if fraction is None or not (0 < fraction <= 1):
        raise ParameterError(f"fraction must lie in (0, 1], got {fraction}")


def _check_new_data(memory: ExemplarMemory, new_class_data: Mapping[str, Sequence[PoseInstance]]):
    stored = memory.stored_ids()
    incoming: set = set()
    for label, insts in new_class_data.items():
        if label in memory.per_class:
            raise ParameterError(f"class {label!r} is already in memory")
        for inst in insts:
            if inst.id in memory.tombstones:
                raise IntegrityError(f"id {inst.id!r} was removed earlier and cannot return")
            if inst.id in stored or inst.id in incoming:
                raise IntegrityError(f"id {inst.id!r} appears more than once")
            incoming.add(inst.id)


def update_memory(memory: ExemplarMemory, new_class_data: Mapping[str, Sequence[PoseInstance]],
                  strategy: SamplerStrategy, lookup: Optional[Mapping[Any, PoseInstance]] = None
                  ) -> ExemplarMemory:
    """Fixed-budget update: shrink old classes, then add the new ones.

    Old classes are reduced to the new quota by re-running the selector on
    their stored exemplars only; evicted ids are tombstoned. ``lookup`` maps
    ids to instances for memories whose instance cache is empty (e.g. one
    re-loaded from a manifest).
    """
    if memory.mode != "fixed":
        raise ParameterError("update_memory requires a fixed-mode memory")
    _check_new_data(memory, new_class_data)
    out = memory.copy()
    out.strategy = strategy
    c = len(out.per_class) + len(new_class_data)
    if c == 0:
        return out
    quota = per_class_quota(out.budget, c)
    for label, ids in out.per_class.items():
        if len(ids) <= quota:
            continue
        insts = [_resolve(out, i, lookup) for i in ids]
        kept = _select(insts, quota, strategy)
        keep = set(kept)
        out.tombstones.update(i for i in ids if i not in keep)
        for i in ids:
            if i not in keep:
                out.store.pop(i, None)
        out.per_class[label] = list(kept)
    for label, insts in new_class_data.items():
        insts = list(insts)
        picked = _select(insts, min(quota, len(insts)), strategy)
        out.per_class[label] = picked
        by_id = {inst.id: inst for inst in insts}
        out.store.update((i, by_id[i]) for i in picked)
    out.step = memory.step + 1
    out.check_invariants()
    return out


def growing_update(memory: ExemplarMemory, new_class_data: Mapping[str, Sequence[PoseInstance]],
                   fraction: Optional[float] = None,
                   strategy: Optional[SamplerStrategy] = None) -> ExemplarMemory:
    """Add ``ceil(fraction * |class|)`` exemplars per new class; never shrink."""
    if memory.mode != "growing":
        raise ParameterError("growing_update requires a growing-mode memory")
    fraction = memory.fraction if fraction is None else fraction
    _check_fraction(fraction)
    strategy = strategy or memory.strategy or SamplerStrategy()
    _check_new_data(memory, new_class_data)
    out = memory.copy()
    out.strategy = strategy
    for label, insts in new_class_data.items():
        insts = list(insts)
        # rounding guards against 0.1 * 30 = 3.0000000000000004
        n = min(len(insts), math.ceil(round(fraction * len(insts), 9)))
        picked = _select(insts, n, strategy)
        out.per_class[label] = picked
        by_id = {inst.id: inst for inst in insts}
        out.store.update((i, by_id[i]) for i in picked)
    out.step = memory.step + 1
    out.check_invariants()
    return out


def _resolve(memory, i, lookup):
    if i in memory.store:
        return memory.store[i]
    if lookup is not None and i in lookup:
        return lookup[i]
    raise IntegrityError(f"no instance data for stored id {i!r}; pass lookup=")


def _select(insts, n, strategy):
    return list(select_exemplars(insts, n, strategy).ids)


def _id_key(i):
    return (type(i).__name__, i)


def to_manifest(memory: ExemplarMemory) -> dict:
    strategy = memory.strategy.to_dict() if memory.strategy else None
    return {
        "schema_version": MANIFEST_VERSION,
        "step": memory.step,
        "mode": memory.mode,
        "budget": memory.budget,
        "fraction": memory.fraction,
        "strategy": strategy,
        "classes": [{"label": c, "ids": list(ids)} for c, ids in memory.per_class.items()],
        "tombstones": sorted(memory.tombstones, key=_id_key),
    }


def from_manifest(d: Mapping) -> ExemplarMemory:
    try:
        if d["schema_version"] != MANIFEST_VERSION:
            raise ParseError(f"unsupported manifest schema {d['schema_version']!r}")
        strategy = SamplerStrategy.from_dict(d["strategy"]) if d.get("strategy") else None
        mem = ExemplarMemory(
            budget=int(d["budget"]), mode=d["mode"], fraction=d.get("fraction"),
            per_class={e["label"]: list(e["ids"]) for e in d["classes"]},
            tombstones=set(d.get("tombstones", [])), step=int(d["step"]), strategy=strategy,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed manifest: {exc!r}") from exc
    return mem


def write_manifest(memory: ExemplarMemory, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_manifest(memory), indent=2) + "\n")
    return path


def read_manifest(path) -> ExemplarMemory:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return from_manifest(d)
