"""k-DPP probabilities and MAP subset selection.

Selection follows the greedy log-determinant ascent: at every step the item
with the largest conditional variance given the current picks is added. The
conditional variances are maintained by an incremental Cholesky update so a
run of ``k`` steps costs ``O(N k^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations, islice
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSelectionWarning,
    InstanceTooLargeError,
    ParameterError,
    RankError,
)
from .kernels import DEFAULT_RANK_TOL, as_kernel, numerical_rank

# conditional variances below this fraction of the largest diagonal entry
# are treated as exhausted rank
VARIANCE_FLOOR = 1e-12

BRUTE_FORCE_LIMIT = 10**6
_BATCH = 20_000


@dataclass(frozen=True)
class SubsetSelection:
    """Indices into a kernel plus the log-determinant of their submatrix.

    ``indices`` keeps the order in which items were chosen. ``gains`` holds
    the per-step log conditional variances for greedy runs (empty for
    exhaustive search). ``degenerate`` is set when the submatrix is singular,
    in which case ``log_det`` is ``-inf``.
    """

    indices: tuple
    log_det: float
    degenerate: bool = False
    gains: tuple = field(default=())

    @property
    def k(self) -> int:
        return len(self.indices)

    def sorted(self) -> tuple:
        return tuple(sorted(self.indices))


def _greedy_path(A: np.ndarray, k: int):
    """Run up to ``k`` greedy steps; stop early when rank is exhausted.

    Returns ``(indices, log_gains)``; fewer than ``k`` indices means every
    remaining candidate fell below the variance floor.
    """
    n = A.shape[0]
    d2 = np.array(np.diag(A), dtype=np.float64)
    scale = max(float(np.max(d2)), 0.0) if n else 0.0
    floor = VARIANCE_FLOOR * scale
    cis = np.zeros((k, n))
    avail = np.ones(n, dtype=bool)
    picked: list[int] = []
    gains: list[float] = []
    for step in range(k):
        masked = np.where(avail, d2, -np.inf)
        j = int(np.argmax(masked))  # first maximum wins ties
        if not avail[j] or not masked[j] > floor:
            break
        picked.append(j)
        gains.append(math.log(masked[j]))
        avail[j] = False
        if step + 1 == k:
            break
        dj = math.sqrt(masked[j])
        e = (A[j, :] - cis[:step, j] @ cis[:step, :]) / dj
        cis[step, :] = e
        d2 -= e * e
    return picked, gains


def greedy_map_kdpp(K, k: int, tol: float = DEFAULT_RANK_TOL) -> SubsetSelection:
    """Greedy approximation to the k-DPP MAP subset.

    Raises :class:`RankError` when ``k`` exceeds the numerical rank of ``K``
    (or the greedy conditional variances are exhausted before ``k`` picks).
    """
    K = as_kernel(K)
    n = K.n
    if k < 1 or k > n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    rank = numerical_rank(K, tol)
    if k > rank:
        raise RankError(f"k={k} exceeds numerical rank {rank} of the kernel")
    picked, gains = _greedy_path(K.data, k)
    if len(picked) < k:
        raise RankError(
            f"conditional variances exhausted after {len(picked)} of {k} picks")
    return SubsetSelection(tuple(picked), float(sum(gains)), False, tuple(gains))


def greedy_with_fill(K, k: int):
    """Greedy picks up to the available rank, then lowest unused indices.

    Returns ``(indices, filled)`` where ``filled`` counts the index-filled
    items. Never raises on rank shortfall.
    """
    K = as_kernel(K)
    n = K.n
    if k < 0 or k > n:
        raise ParameterError(f"k must lie in [0, {n}], got {k}")
    if k == 0:
        return [], 0
    picked, _ = _greedy_path(K.data, k)
    filled = k - len(picked)
    if filled:
        chosen = set(picked)
        rest = [i for i in range(n) if i not in chosen]
        picked.extend(rest[:filled])
    return picked, filled


def _batched_logdet(A: np.ndarray, combos: np.ndarray) -> np.ndarray:
    subs = A[combos[:, :, None], combos[:, None, :]]
    sign, logdet = np.linalg.slogdet(subs)
    return np.where(sign > 0, logdet, -np.inf)


def brute_force_map(K, k: int, limit: int = BRUTE_FORCE_LIMIT) -> SubsetSelection:
    """Exact MAP by enumerating every size-``k`` subset.

    Ties go to the lexicographically smallest index tuple.
    """
    K = as_kernel(K)
    n = K.n
    if k < 0 or k > n:
        raise ParameterError(f"k must lie in [0, {n}], got {k}")
    if k == 0:
        return SubsetSelection((), 0.0)
    total = math.comb(n, k)
    if total > limit:
        raise InstanceTooLargeError(f"C({n},{k}) = {total} subsets exceeds guard {limit}")
    A = K.data
    best, best_val = None, -np.inf
    it = combinations(range(n), k)
    while True:
        chunk = list(islice(it, _BATCH))
        if not chunk:
            break
        combos = np.array(chunk, dtype=np.intp)
        vals = _batched_logdet(A, combos)
        j = int(np.argmax(vals))
        if best is None or vals[j] > best_val:
            best, best_val = chunk[j], float(vals[j])
    degenerate = not np.isfinite(best_val)
    return SubsetSelection(tuple(best), best_val, degenerate)


def elementary_symmetric(eigvals: Sequence[float], k: int) -> float:
    """``e_k`` of ``eigvals``; zero when ``k`` exceeds the number of values.

    Uses the recurrence ``e_k^(n) = e_k^(n-1) + λ_n e_{k-1}^(n-1)``.
    """
    lam = [float(x) for x in eigvals]
    if k < 0:
        raise ParameterError("k must be non-negative")
    if k > len(lam):
        return 0.0
    e = [1.0] + [0.0] * k
    for n, x in enumerate(lam, start=1):
        for j in range(min(n, k), 0, -1):
            e[j] += x * e[j - 1]
    return e[k]


def log_elementary_symmetric(eigvals: Sequence[float], k: int) -> float:
    """``log e_k`` with values rescaled by their maximum to avoid overflow."""
    lam = np.clip(np.asarray(eigvals, dtype=np.float64), 0.0, None)
    if k == 0:
        return 0.0
    top = float(lam.max()) if lam.size else 0.0
    if top <= 0:
        return -np.inf
    ek = elementary_symmetric(lam / top, k)
    if ek <= 0:
        return -np.inf
    return math.log(ek) + k * math.log(top)


def _subset_indices(S, n: int) -> np.ndarray:
    idx = S.indices if isinstance(S, SubsetSelection) else S
    idx = np.asarray(list(idx), dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ParameterError("subset index out of range")
    if len(set(idx.tolist())) != idx.size:
        raise ParameterError("subset indices must be distinct")
    return idx


def subset_log_det(K, S) -> float:
    """log det of the principal submatrix; ``-inf`` (with a warning) if singular."""
    K = as_kernel(K)
    idx = _subset_indices(S, K.n)
    if idx.size == 0:
        return 0.0
    sign, val = np.linalg.slogdet(K.submatrix(idx))
    if sign <= 0:
        warnings.warn("selected submatrix is singular", DegenerateSelectionWarning, stacklevel=3)
        return -np.inf
    return float(val)


def kdpp_log_prob(K, S, tol: float = DEFAULT_RANK_TOL) -> float:
    """log P(S) under the k-DPP with ``k = |S|``."""
    K = as_kernel(K)
    idx = _subset_indices(S, K.n)
    k = idx.size
    if k > numerical_rank(K, tol):
        raise RankError(f"|S|={k} exceeds the numerical rank of the kernel")
    eig = np.linalg.eigvalsh(K.data)
    return subset_log_det(K, idx) - log_elementary_symmetric(eig, k)


def unconstrained_dpp_log_prob(K, S) -> float:
    """log P(S) under the L-ensemble DPP: ``log det(K_S) - log det(I + K)``."""
    K = as_kernel(K)
    idx = _subset_indices(S, K.n)
    sign, norm = np.linalg.slogdet(np.eye(K.n) + K.data)
    return subset_log_det(K, idx) - float(norm)
