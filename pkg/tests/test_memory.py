import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import pose_1d
from posedpp.errors import IntegrityError, ParameterError, ParseError, RankFallbackWarning
from posedpp.kernels import PoseInstance, flatten_poses
from posedpp.memory import (
    ExemplarMemory,
    SamplerStrategy,
    baseline_select,
    from_manifest,
    growing_update,
    per_class_quota,
    read_manifest,
    select_exemplars,
    to_manifest,
    update_memory,
    write_manifest,
)
from posedpp.synthetic import blob_poses, uniform_poses

RBF = SamplerStrategy("rbf_kdpp", gamma=50.0)


def cls(label, n, seed=0):
    return blob_poses(n, seed=seed, label=label, id_prefix=f"{label}-")


def rbf_greedy_oracle(insts, k, gamma=50.0):
    """Direct determinant-maximising greedy on an explicitly built RBF kernel."""
    X = flatten_poses(insts).data
    K = np.exp(-gamma * ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    S = []
    for _ in range(k):
        vals = [np.linalg.slogdet(K[np.ix_(S + [j], S + [j])])[1] if j not in S else -np.inf
                for j in range(len(X))]
        S.append(int(np.argmax(vals)))
    return [insts[i].id for i in S]


@pytest.mark.parametrize("budget,c,want", [(1000, 5, 200), (500, 3, 166), (500, 5, 100)])
def test_quota_examples(budget, c, want):
    assert per_class_quota(budget, c) == want


def test_quota_errors():
    with pytest.raises(ParameterError):
        per_class_quota(100, 0)


@pytest.mark.parametrize("kind", ["rbf_kdpp", "clustered_kdpp", "random", "herding", "reservoir",
                                  "greedy_balanced"])
def test_select_all_when_n_equals_size(kind):
    insts = cls("cat", 12)
    sel = select_exemplars(insts, 12, SamplerStrategy(kind))
    assert sel.ids == [p.id for p in insts]


def test_herding_example():
    insts = pose_1d([0, 1, 2, 9])
    assert baseline_select(insts, 2, "herding", scaling="pixel") == [2, 1]


def test_herding_tie_takes_lower_index():
    insts = pose_1d([1, 5])
    assert baseline_select(insts, 1, "herding", scaling="pixel") == [0]


def test_rbf_kdpp_skips_duplicate():
    base = blob_poses(2, seed=4)
    dup = PoseInstance("dup", "cat", base[0].keypoints, base[0].bbox)
    insts = [base[0], dup, base[1]]
    # oracle: det of every pair
    X = flatten_poses(insts).data
    K = np.exp(-50.0 * ((X[:, None] - X[None]) ** 2).sum(-1))
    pairs = {(i, j): np.linalg.det(K[np.ix_([i, j], [i, j])]) for i in range(3) for j in range(i + 1, 3)}
    assert pairs[(0, 1)] < 1e-12
    best = max(pairs, key=pairs.get)
    assert best in [(0, 2), (1, 2)]
    assert select_exemplars(insts, 2, RBF).ids == [base[0].id, base[1].id]


def test_rbf_kdpp_matches_determinant_oracle():
    insts = cls("dog", 25, seed=5)
    assert select_exemplars(insts, 6, RBF).ids == rbf_greedy_oracle(insts, 6)


def test_rbf_kdpp_rank_fallback():
    base = blob_poses(1)[0]
    insts = [PoseInstance(i, "cat", base.keypoints, base.bbox) for i in range(5)]
    with pytest.warns(RankFallbackWarning):
        sel = select_exemplars(insts, 3, RBF)
    assert sel.rank_fallback and sel.ids == [0, 1, 2]


def test_baseline_determinism_and_reservoir():
    insts = cls("cat", 30)
    assert baseline_select(insts, 5, "random", seed=9) == baseline_select(insts, 5, "random", seed=9)
    assert baseline_select(insts, 40, "reservoir") == [p.id for p in insts]
    assert baseline_select(insts, 4, "greedy_balanced") == [p.id for p in insts[:4]]
    assert len(set(baseline_select(insts, 10, "reservoir", seed=2))) == 10
    with pytest.raises(ParameterError):
        baseline_select(insts, 2, "nope")


def test_strategy_validation():
    with pytest.raises(ParameterError):
        SamplerStrategy("unknown")
    with pytest.raises(ParameterError):
        SamplerStrategy(gamma=-1)
    s = SamplerStrategy("herding", 3.0, 7, "pixel")
    assert SamplerStrategy.from_dict(s.to_dict()) == s


# fixed-budget updates


def test_first_class_stores_min_quota_size():
    mem = update_memory(ExemplarMemory.fixed(1000), {"A": uniform_poses(800, seed=1, label="A")},
                        SamplerStrategy("random"))
    assert mem.counts() == {"A": 800}
    assert mem.step == 0


def test_second_class_halves_quota():
    a = [p.with_keypoints(p.keypoints, id=f"a{p.id}") for p in uniform_poses(500, seed=1, label="A")]
    b = [p.with_keypoints(p.keypoints, id=f"b{p.id}") for p in uniform_poses(800, seed=2, label="B")]
    strat = SamplerStrategy("random")
    mem = update_memory(ExemplarMemory.fixed(1000), {"A": a}, strat)
    mem = update_memory(mem, {"B": b}, strat)
    assert mem.counts() == {"A": 500, "B": 500}
    assert not mem.tombstones


def test_third_class_evicts_via_selector_on_stored_only():
    strat = SamplerStrategy("rbf_kdpp")
    mem = ExemplarMemory.fixed(30)
    mem = update_memory(mem, {"A": cls("A", 40, 1)}, strat)
    mem = update_memory(mem, {"B": cls("B", 40, 2)}, strat)
    stored_a = [mem.store[i] for i in mem.per_class["A"]]
    new = update_memory(mem, {"C": cls("C", 40, 3)}, strat)
    assert new.counts() == {"A": 10, "B": 10, "C": 10}
    assert new.per_class["A"] == rbf_greedy_oracle(stored_a, 10)
    assert set(new.per_class["A"]) <= set(mem.per_class["A"])
    evicted = new.tombstones - mem.tombstones
    assert evicted == (set(mem.per_class["A"]) | set(mem.per_class["B"])) - new.stored_ids()
    assert len(evicted) == 10 and mem.tombstones <= new.tombstones
    # original memory untouched
    assert mem.counts() == {"A": 15, "B": 15}


def test_update_errors():
    strat = SamplerStrategy("random")
    mem = update_memory(ExemplarMemory.fixed(4), {"A": cls("A", 6)}, strat)
    with pytest.raises(ParameterError):
        update_memory(mem, {"A": cls("A", 3, 9)}, strat)
    mem2 = update_memory(mem, {"B": cls("B", 6)}, strat)
    gone = next(iter(mem2.tombstones))
    back = [PoseInstance(gone, "C", np.zeros((17, 3)), (0, 0, 1, 1))]
    with pytest.raises(IntegrityError):
        update_memory(mem2, {"C": back}, strat)
    dup = cls("D", 2)
    with pytest.raises(IntegrityError):
        update_memory(mem2, {"D": dup + dup}, strat)
    with pytest.raises(ParameterError):
        ExemplarMemory.fixed(0)
    with pytest.raises(ParameterError):
        growing_update(mem2, {"E": cls("E", 2)})


def test_update_needs_lookup_after_reload(tmp_path):
    strat = SamplerStrategy("herding")
    data = cls("A", 10)
    mem = update_memory(ExemplarMemory.fixed(10), {"A": data}, strat)
    again = read_manifest(write_manifest(mem, tmp_path / "m.json"))
    with pytest.raises(IntegrityError):
        update_memory(again, {"B": cls("B", 10)}, strat)
    ok = update_memory(again, {"B": cls("B", 10)}, strat, lookup={p.id: p for p in data})
    assert ok.counts() == {"A": 5, "B": 5}


def test_update_is_deterministic():
    strat = SamplerStrategy("clustered_kdpp", seed=4)
    runs = []
    for _ in range(2):
        mem = ExemplarMemory.fixed(40)
        for c in "ABC":
            mem = update_memory(mem, {c: cls(c, 30, ord(c))}, strat)
        runs.append(to_manifest(mem))
    assert runs[0] == runs[1]


# growing mode


def test_growing_examples():
    mem = growing_update(ExemplarMemory.growing(0.1), {"A": cls("A", 200)})
    assert mem.counts() == {"A": 20}
    mem = growing_update(mem, {"B": cls("B", 30)})
    assert mem.counts() == {"A": 20, "B": 3}
    full = growing_update(ExemplarMemory.growing(1.0), {"A": cls("A", 7)})
    assert full.counts() == {"A": 7}
    with pytest.raises(ParameterError):
        growing_update(ExemplarMemory.growing(0.5), {"A": cls("A", 7)}, fraction=1.5)
    with pytest.raises(ParameterError):
        ExemplarMemory.growing(0.0)


# manifests


def test_manifest_round_trip(tmp_path):
    strat = SamplerStrategy("rbf_kdpp", seed=1)
    mem = ExemplarMemory.fixed(12)
    for c in "AB":
        mem = update_memory(mem, {c: cls(c, 10)}, strat)
    mem = update_memory(mem, {"C": uniform_poses(10, seed=3, label="C")}, strat)
    path = write_manifest(mem, tmp_path / "step.json")
    back = read_manifest(path)
    assert back == mem
    back.check_invariants()
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert path.read_text() == write_manifest(back, tmp_path / "again.json").read_text()


def test_manifest_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        read_manifest(bad)
    with pytest.raises(ParseError):
        from_manifest({"schema_version": 99})
    with pytest.raises(ParseError):
        from_manifest({"schema_version": 1})


# property: invariants under arbitrary update sequences

sizes = st.lists(st.integers(0, 25), min_size=1, max_size=8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), sizes, st.sampled_from(["rbf_kdpp", "random", "herding", "reservoir",
                                                    "greedy_balanced", "clustered_kdpp"]),
       st.integers(0, 1000))
def test_fixed_invariants_hold(budget, class_sizes, kind, seed):
    strat = SamplerStrategy(kind, seed=seed)
    mem = ExemplarMemory.fixed(budget)
    tomb = set()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankFallbackWarning)
        for c, n in enumerate(class_sizes):
            data = uniform_poses(n, seed=seed + c, label=f"c{c}")
            data = [p.with_keypoints(p.keypoints, id=f"c{c}-{p.id}") for p in data]
            mem = update_memory(mem, {f"c{c}": data}, strat)
            q = per_class_quota(budget, c + 1)
            assert mem.total <= budget
            assert all(v <= q for v in mem.counts().values())
            assert mem.counts()[f"c{c}"] == min(q, n)
            assert tomb <= mem.tombstones
            assert not (mem.stored_ids() & mem.tombstones)
            tomb = set(mem.tombstones)
