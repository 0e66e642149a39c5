"""K-means and the clustered linear-kernel k-DPP selector.

A linear kernel over ``3J``-dimensional pose features has rank at most
``3J``, so a single greedy k-DPP run cannot return more than ``3J`` items.
The clustered selector partitions the data and draws at most ``3J`` items
from each cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dpp import greedy_with_fill
from .errors import ParameterError
from .kernels import _features, build_kernel

MAX_ITER = 100
TOL = 1e-6


@dataclass(frozen=True)
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    history: tuple = ()
    n_iter: int = 0

    @property
    def h(self) -> int:
        return self.centroids.shape[0]

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == j)


def _sq_dists(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_pp(X, h, rng):
    n = X.shape[0]
    first = int(rng.integers(n))
    centers = [first]
    d2 = np.einsum("ij,ij->i", X - X[first], X - X[first])
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    for _ in range(1, h):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a center
            nxt = int(np.flatnonzero(~taken)[0])
        centers.append(nxt)
        taken[nxt] = True
        diff = X - X[nxt]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return X[centers].copy()


def _fill_empty(X, assign, C, d2_own):
    h = C.shape[0]
    counts = np.bincount(assign, minlength=h)
    for j in np.flatnonzero(counts == 0):
        donors = counts[assign] > 1
        cand = np.where(donors, d2_own, -np.inf)
        p = int(np.argmax(cand))
        counts[assign[p]] -= 1
        assign[p] = j
        counts[j] = 1
        d2_own[p] = 0.0
        C[j] = X[p]
    return assign


def kmeans(F, h: int, seed: int = 0, max_iter: int = MAX_ITER, tol: float = TOL) -> Clustering:
    """k-means++ seeded Lloyd iterations.

    Stops when no centroid moves more than ``tol`` or after ``max_iter``
    iterations. An empty cluster takes over the point lying farthest from
    its own centroid among clusters that can spare one.
    """
    X = _features(F)
    n = X.shape[0]
    if not 1 <= h <= n:
        raise ParameterError(f"h must lie in [1, {n}], got {h}")
    rng = np.random.default_rng(seed)
    C = _kmeans_pp(X, h, rng)
    history = []
    assign = np.zeros(n, dtype=np.intp)
    it = 0
    for it in range(1, max_iter + 1):
        D = _sq_dists(X, C)
        assign = np.argmin(D, axis=1)
        d2_own = D[np.arange(n), assign]
        assign = _fill_empty(X, assign, C, d2_own)
        new_C = np.empty_like(C)
        for j in range(h):
            new_C[j] = X[assign == j].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_C - C, axis=1)))
        C = new_C
        diff = X - C[assign]
        history.append(float(np.einsum("ij,ij->", diff, diff)))
        if shift < tol:
            break
    inertia = history[-1]
    return Clustering(assign, C, inertia, tuple(history), it)


def num_clusters(quota: int, dim: int) -> int:
    return max(1, math.ceil(quota / dim))


def clustered_kdpp_select(F, quota: int, seed: int = 0, with_counts: bool = False):
    """Select exactly ``quota`` indices using per-cluster linear-kernel k-DPPs.

    The data is split into ``max(1, ceil(quota / 3J))`` clusters. Clusters are
    visited largest first and each contributes a greedy MAP subset of at most
    ``3J`` items. If a pass leaves quota unfilled (small clusters), further
    passes draw from each cluster's unselected items. Returns sorted indices
    (and per-cluster counts when ``with_counts`` is set).
    """
    X = _features(F)
    n, dim = X.shape
    if not 0 <= quota <= n:
        raise ParameterError(f"quota must lie in [0, {n}], got {quota}")
    if quota == 0:
        return ([], {}) if with_counts else []
    if quota == n:
        out = list(range(n))
        return (out, {0: n}) if with_counts else out
    h = num_clusters(quota, dim)
    clus = kmeans(X, h, seed)
    sizes = np.bincount(clus.assignments, minlength=h)
    order = sorted(range(h), key=lambda j: (-sizes[j], j))
    pools = {j: clus.members(j).tolist() for j in order}
    chosen: list[int] = []
    counts = {j: 0 for j in order}
    remaining = quota
    while remaining > 0:
        for j in order:
            pool = pools[j]
            take = min(dim, len(pool), remaining)
            if take == 0:
                continue
            K = build_kernel(X[pool], "linear")
            local, _ = greedy_with_fill(K, take)
            picked = [pool[i] for i in local]
            chosen.extend(picked)
            counts[j] += len(picked)
            taken = set(picked)
            pools[j] = [p for p in pool if p not in taken]
            remaining -= len(picked)
            if remaining == 0:
                break
    out = sorted(chosen)
    return (out, counts) if with_counts else out
