"""Randomized greedy center selection.

Three selection styles share one loop skeleton: seed with a small uniform
sample, then repeatedly sample from the current farthest set.  The full-data
variants maintain a NearestTracker over all points; the sublinear variant
touches only a fresh uniform sample each round, so its per-round distance
work is independent of n.

All uniform draws are without replacement (capped at the population size) and
results are deduplicated against the current center set, so a round's growth
is deterministic in size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CenterSet,
    NearestTracker,
    ParamSet,
    PointSet,
    ceil_count,
    cost_radius,
    farthest_m,
    relaxed_exclusions,
)

__all__ = [
    "GreedyConfig",
    "SublinearConfig",
    "greedy_config",
    "sublinear_config",
    "boost_repetitions",
    "bicriteria",
    "two_approx",
    "two_approx_boosted",
    "sublinear_bicriteria",
]


@dataclass(frozen=True)
class GreedyConfig:
    """Round budget and sample sizes for the bi-criteria loop."""

    params: ParamSet
    rounds: int
    round_constant: float
    init_sample: int
    per_round_sample: int

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("round count must be >= 1")
        if self.init_sample < 1 or self.per_round_sample < 1:
            raise ValueError("sample counts must be >= 1")
        if self.round_constant <= 0:
            raise ValueError("round constant must be positive")


def greedy_config(params: ParamSet, rounds_override: int | None = None) -> GreedyConfig:
    """Derive the round budget and sample sizes from the parameters.

    round_constant c = 2 + (2 / (k (1 - eta))) ln(1/eta); the default round
    count is ceil(c k / (1 - eta)).  rounds_override replaces the count while
    keeping c (callers that enlarge the budget reuse it).
    """
    k, eta, eps, gamma = params.k, params.eta, params.eps, params.gamma
    log_term = math.log(1.0 / eta)
    c = 2.0 + (2.0 / (k * (1.0 - eta))) * log_term
    rounds = ceil_count(c * k / (1.0 - eta)) if rounds_override is None else int(rounds_override)
    return GreedyConfig(
        params=params,
        rounds=rounds,
        round_constant=c,
        init_sample=ceil_count(log_term / (1.0 - gamma)),
        per_round_sample=ceil_count(((1.0 + eps) / eps) * log_term),
    )


@dataclass(frozen=True)
class SublinearConfig:
    """Per-round sampling plan for the sample-only variant."""

    sigma: float
    sample_size: int
    take_per_round: int

    def __post_init__(self) -> None:
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if self.sample_size < 1:
            raise ValueError("per-round sample size must be >= 1")
        if not 0 < self.take_per_round <= self.sample_size:
            raise ValueError("take_per_round must lie in [1, sample_size]")


def sublinear_config(params: ParamSet) -> SublinearConfig:
    """sigma = 2 / (1 + sqrt(1 + 4(1+eps)/(3 eps))); the sample size makes the
    farthest-set hit count concentrate within a (1 +- sigma) factor."""
    eps, gamma, eta = params.eps, params.gamma, params.eta
    if gamma == 0:
        raise ValueError("sample-only selection needs outliers (z >= 1)")
    sigma = 2.0 / (1.0 + math.sqrt(1.0 + 4.0 * (1.0 + eps) / (3.0 * eps)))
    sample_size = ceil_count(3.0 / (sigma * sigma * (1.0 + eps) * gamma) * math.log(4.0 / eta))
    take = ceil_count((1.0 + sigma) * (1.0 + eps) * gamma * sample_size)
    return SublinearConfig(sigma=sigma, sample_size=sample_size, take_per_round=take)


def boost_repetitions(params: ParamSet) -> int:
    """Repetition count driving the boosted failure probability below 10%."""
    ratio = (1.0 + params.eps) / params.eps
    return ceil_count(math.log(10.0) * (1.0 / (1.0 - params.gamma)) * ratio ** (params.k - 1))


class _GreedyRun:
    """Tracker-backed selection state shared by the full-data variants."""

    def __init__(self, ps: PointSet, rng: np.random.Generator, stats: dict | None = None):
        self.ps = ps
        self.rng = rng
        self.tracker = NearestTracker(ps)
        self.indices: list[int] = []
        self.rounds: list[int] = []
        self.members: set[int] = set()
        self.round_no = 1
        self.stats = stats

    def add_picks(self, picks: np.ndarray) -> int:
        added = 0
        for p in picks.tolist():
            p = int(p)
            if p in self.members:
                continue
            self.members.add(p)
            self.indices.append(p)
            self.rounds.append(self.round_no)
            self.tracker.add_center(p)
            added += 1
        if self.stats is not None:
            self.stats.setdefault("round_added", []).append(added)
            self.stats.setdefault("round_max_mindist", []).append(float(self.tracker.mindist.max()))
        return added

    def seed_round(self, count: int) -> None:
        picks = self.rng.choice(self.ps.n, size=min(count, self.ps.n), replace=False)
        self.add_picks(np.atleast_1d(picks))

    def farthest_round(self, pool_size: int, sample_count: int) -> None:
        pool = farthest_m(self.tracker, min(pool_size, self.ps.n))
        picks = self.rng.choice(pool, size=min(sample_count, pool.size), replace=False)
        self.add_picks(np.atleast_1d(picks))

    def all_covered(self) -> bool:
        return float(self.tracker.mindist.max()) == 0.0

    def result(self) -> CenterSet:
        return CenterSet(tuple(self.indices), tuple(self.rounds))


def _farthest_pool_size(params: ParamSet) -> int:
    # z = 0 would empty the pool; clamp so rounds still make progress.
    return max(1, relaxed_exclusions(params.z, params.eps))


def bicriteria(ps: PointSet, cfg: GreedyConfig, rng: np.random.Generator, stats: dict | None = None) -> CenterSet:
    """Multi-draw greedy: seed, then per round sample per_round_sample
    vertices from the current farthest set.  Output size is at most
    init_sample + (rounds - 1) * per_round_sample."""
    params = cfg.params
    run = _GreedyRun(ps, rng, stats)
    run.seed_round(cfg.init_sample)
    pool_size = _farthest_pool_size(params)
    for j in range(2, cfg.rounds + 1):
        if run.all_covered():
            break
        run.round_no = j
        run.farthest_round(pool_size, cfg.per_round_sample)
    return run.result()


def two_approx(ps: PointSet, params: ParamSet, rng: np.random.Generator) -> CenterSet:
    """One uniform seed plus k-1 single draws from the farthest set."""
    run = _GreedyRun(ps, rng)
    run.seed_round(1)
    pool_size = _farthest_pool_size(params)
    for j in range(2, params.k + 1):
        if run.all_covered():
            break
        run.round_no = j
        run.farthest_round(pool_size, 1)
    return run.result()


def two_approx_boosted(
    ps: PointSet,
    params: ParamSet,
    rng: np.random.Generator,
    repetitions: int | None = None,
) -> CenterSet:
    """Repeat two_approx and keep the candidate with the smallest relaxed
    cost; the default repetition count caps the failure probability at 10%."""
    reps = boost_repetitions(params) if repetitions is None else int(repetitions)
    if reps < 1:
        raise ValueError("repetition count must be >= 1")
    best: CenterSet | None = None
    best_cost = math.inf
    for _ in range(reps):
        candidate = two_approx(ps, params, rng)
        cost = cost_radius(ps, candidate, params.z, params.eps)
        if cost < best_cost:
            best, best_cost = candidate, cost
    assert best is not None
    return best


def sublinear_bicriteria(
    ps: PointSet,
    cfg: GreedyConfig,
    sub: SublinearConfig,
    rng: np.random.Generator,
    stats: dict | None = None,
) -> CenterSet:
    """Sample-only greedy: each round scores a fresh uniform sample against
    the current centers and keeps the take_per_round farthest sampled points.

    No tracker over the full set is maintained; a round evaluates exactly
    |sample| * |centers| distances, independent of n.
    """
    n = ps.n
    indices: list[int] = []
    rounds: list[int] = []
    members: set[int] = set()

    seed_picks = rng.choice(n, size=min(cfg.init_sample, n), replace=False)
    for p in np.atleast_1d(seed_picks).tolist():
        p = int(p)
        if p not in members:
            members.add(p)
            indices.append(p)
            rounds.append(1)

    draw = min(sub.sample_size, n)
    for j in range(2, cfg.rounds + 1):
        before = ps.stats.evals
        sample = rng.choice(n, size=draw, replace=False)
        dists = ps.cross_dists(sample, np.asarray(indices, dtype=np.intp)).min(axis=1)
        if stats is not None:
            stats.setdefault("round_dist_evals", []).append(ps.stats.evals - before)
        if float(dists.max()) == 0.0:
            break
        take = min(sub.take_per_round, draw)
        picked = sample[farthest_m(dists, take)]
        added = 0
        for p in picked.tolist():
            p = int(p)
            if p not in members:
                members.add(p)
                indices.append(p)
                rounds.append(j)
                added += 1
        if stats is not None:
            stats.setdefault("round_added", []).append(added)
    return CenterSet(tuple(indices), tuple(rounds))
