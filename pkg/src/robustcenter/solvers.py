"""Host solvers: baselines that consume plain or weighted instances.

These are deliberately classical algorithms (farthest-first traversal, the
radius-guessing 3-approximation, exhaustive search) used as composition hosts
and as ground-truth oracles in tests.  Everything here is deterministic given
its inputs; the exhaustive search is deterministic regardless of worker count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import CenterSet, GuardError, NearestTracker, PointSet, clustering_cost

__all__ = [
    "OracleResult",
    "gonzalez",
    "charikar_3approx",
    "brute_force_opt",
    "brute_force_weighted",
]

ENUMERATION_GUARD = 2_000_000
_MATRIX_GUARD = 4_000  # full pairwise block above this is not desk-scale


@dataclass(frozen=True)
class OracleResult:
    """Exhaustive-search outcome: optimal radius, the lexicographically
    smallest optimal center set, and the excluded indices at that optimum."""

    r_opt: float
    opt_centers: CenterSet
    opt_excluded: frozenset[int]


def gonzalez(
    ps: PointSet,
    k: int,
    rng: np.random.Generator | None = None,
    start: int | None = None,
) -> CenterSet:
    """Farthest-first traversal; 2-approximation for the no-outlier problem.

    The start point is uniform when an rng is given and index 0 otherwise;
    every later pick is the point farthest from the chosen set, lower index
    winning ties.
    """
    if not 1 <= k <= ps.n:
        raise ValueError("k must lie in [1, n]")
    if start is None:
        start = int(rng.integers(ps.n)) if rng is not None else 0
    if not 0 <= start < ps.n:
        raise ValueError("start index out of range")
    tracker = NearestTracker(ps)
    tracker.add_center(start)
    indices = [start]
    for _ in range(k - 1):
        if float(tracker.mindist.max()) == 0.0:
            break
        nxt = int(np.argmax(tracker.mindist))
        tracker.add_center(nxt)
        indices.append(nxt)
    return CenterSet(tuple(indices), tuple(range(1, len(indices) + 1)))


def _coverage_greedy(
    dmat: np.ndarray, w: np.ndarray, k: int, r: float
) -> tuple[list[int], float]:
    # Pick the point covering the most uncovered weight within r, then mark
    # everything within 3r covered.  Returns picks and leftover weight.
    cov_near = dmat <= r
    cov_wide = dmat <= 3.0 * r
    uncovered = w.astype(np.float64).copy()
    picks: list[int] = []
    for _ in range(k):
        scores = cov_near @ uncovered
        best = int(np.argmax(scores))
        if scores[best] <= 0.0:
            break
        picks.append(best)
        uncovered[cov_wide[best]] = 0.0
    return picks, float(uncovered.sum())


def charikar_3approx(
    ps: PointSet, weights: np.ndarray | None, k: int, z: float
) -> CenterSet:
    """Weighted 3-approximation for k-center with outlier weight budget z.

    Binary-searches the sorted pairwise distances for the smallest radius
    guess whose coverage greedy leaves at most z weight uncovered.  Intended
    for coreset-scale inputs (full pairwise block is materialized).
    """
    n = ps.n
    if k < 1:
        raise ValueError("k must be >= 1")
    if n > _MATRIX_GUARD:
        raise GuardError(f"instance too large for the radius-guessing solver (n={n})")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (n,) or (w <= 0).any():
        raise ValueError("weights must be positive and align with the points")
    if float(w.sum()) <= z:
        raise ValueError("outlier weight budget consumes the whole instance")
    dmat = ps.cross_dists(np.arange(n), np.arange(n))
    candidates = np.unique(dmat)
    lo, hi = -1, candidates.size - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        _, leftover = _coverage_greedy(dmat, w, k, float(candidates[mid]))
        if leftover <= z:
            hi = mid
        else:
            lo = mid
    picks, leftover = _coverage_greedy(dmat, w, k, float(candidates[hi]))
    if leftover > z:
        raise RuntimeError("largest pairwise distance must be feasible")
    return CenterSet(tuple(picks), tuple(range(1, len(picks) + 1)))


def _combo_batches(n: int, k: int, batch: int):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, batch))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def _batch_best(dmat: np.ndarray, combos: np.ndarray, z: int) -> tuple[float, np.ndarray]:
    colmin = dmat[combos].min(axis=1)
    n = colmin.shape[1]
    if z == 0:
        radii = colmin.max(axis=1)
    else:
        radii = np.partition(colmin, n - 1 - z, axis=1)[:, n - 1 - z]
    pos = int(np.argmin(radii))
    return float(radii[pos]), combos[pos]


def brute_force_opt(ps: PointSet, k: int, z: int, workers: int = 1) -> OracleResult:
    """Exhaustive optimum over all k-subsets, dropping the z farthest points.

    Ties on the radius resolve to the lexicographically smallest center set
    (enumeration order).  Guarded to C(n, k) <= 2e6 and n <= 4000.
    """
    n = ps.n
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    if not 0 <= z < n:
        raise ValueError("z must satisfy 0 <= z < n")
    if n > _MATRIX_GUARD:
        raise GuardError(f"instance too large for exhaustive search (n={n})")
    if math.comb(n, k) > ENUMERATION_GUARD:
        raise GuardError(f"enumeration budget exceeded: C({n},{k}) > {ENUMERATION_GUARD}")
    dmat = ps.cross_dists(np.arange(n), np.arange(n))
    batch = max(64, (1 << 22) // max(1, k * n))
    blocks = list(_combo_batches(n, k, batch))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _batch_best(dmat, b, z), blocks))
    else:
        results = [_batch_best(dmat, b, z) for b in blocks]
    best_r, best_combo = math.inf, None
    for r, combo in results:  # in-order fold keeps the lexicographic tie rule
        if r < best_r:
            best_r, best_combo = r, combo
    assert best_combo is not None
    centers = CenterSet(tuple(int(i) for i in best_combo), tuple([1] * k))
    excluded = clustering_cost(ps, centers, z, 0.0).excluded
    return OracleResult(r_opt=best_r, opt_centers=centers, opt_excluded=excluded)


def brute_force_weighted(
    ps: PointSet, weights: np.ndarray, k: int, z: float
) -> tuple[float, CenterSet]:
    """Exhaustive optimum of the weighted cost; oracle for host composition."""
    n = ps.n
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,) or (w <= 0).any():
        raise ValueError("weights must be positive and align with the points")
    if float(w.sum()) <= z:
        raise ValueError("outlier weight budget consumes the whole instance")
    if n > _MATRIX_GUARD or math.comb(n, k) > ENUMERATION_GUARD:
        raise GuardError("enumeration budget exceeded")
    dmat = ps.cross_dists(np.arange(n), np.arange(n))
    best_r, best_combo = math.inf, None
    for combos in _combo_batches(n, k, max(64, (1 << 21) // max(1, k * n))):
        colmin = dmat[combos].min(axis=1)
        order = np.argsort(-colmin, axis=1, kind="stable")
        d_sorted = np.take_along_axis(colmin, order, axis=1)
        cumw = np.cumsum(np.take_along_axis(np.broadcast_to(w, colmin.shape), order, axis=1), axis=1)
        pos = (cumw > z).argmax(axis=1)
        radii = np.take_along_axis(d_sorted, pos[:, None], axis=1)[:, 0]
        p = int(np.argmin(radii))
        if float(radii[p]) < best_r:
            best_r, best_combo = float(radii[p]), combos[p]
    assert best_combo is not None
    return best_r, CenterSet(tuple(int(i) for i in best_combo), tuple([1] * k))
