"""Experiment harness: one record per (seed, algorithm) plus aggregates.

Each run owns a fresh point set, RNG, and distance counter, so runs can be
scheduled concurrently without sharing state; records are sorted before
writing.  Output is JSON lines (runs then aggregates) and a CSV summary of
the aggregates.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ParamSet,
    PointSet,
    clustering_cost,
    cost_radius,
    load_points_csv,
)
from .coreset import build_coreset, build_coreset_auto, compose_with_host
from .distributed import ShardedInstance, run_protocol
from .generate import GeneratorSpec, planted_instance
from .greedy import (
    bicriteria,
    greedy_config,
    sublinear_bicriteria,
    sublinear_config,
    two_approx_boosted,
)
from .solvers import brute_force_opt, charikar_3approx, gonzalez

__all__ = ["ALGORITHMS", "ExperimentSpec", "run_experiment"]

ALGORITHMS = (
    "bicriteria",
    "two_approx",
    "sublinear",
    "gonzalez",
    "charikar",
    "brute_force",
    "coreset",
    "coreset_auto",
    "distributed",
)

_METRICS = (
    "cost_strict",
    "cost_relaxed",
    "composed_radius",
    "wall_time_s",
    "dist_evals",
    "centers_count",
    "coreset_size",
    "points_sent",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated recipe for a batch of runs."""

    algos: tuple[str, ...]
    k: int
    z: int
    seeds: tuple[int, ...]
    source: str | GeneratorSpec
    out: str | None = None
    eps: float = 1.0
    mu: float = 0.5
    eta: float = 0.25
    sites: int = 0
    doubling_dim: float | None = None
    shards_path: str | None = None

    def __post_init__(self) -> None:
        if not self.algos or not self.seeds:
            raise ValueError("need at least one algorithm and one seed")
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms: {unknown}; choose from {ALGORITHMS}")
        if "coreset" in self.algos and self.doubling_dim is None:
            raise ValueError("the fixed-dimension coreset needs --rho")
        if "distributed" in self.algos and self.sites < 1 and self.shards_path is None:
            raise ValueError("distributed runs need --sites or --shards")
        if isinstance(self.source, str) and not Path(self.source).exists():
            raise ValueError(f"input file not found: {self.source}")


def _charikar_host(sub_ps, weights, k, z):
    return charikar_3approx(sub_ps, weights, k, z)


def _fresh_instance(spec: ExperimentSpec, seed: int):
    """Per-run point set with its own distance counter."""
    if isinstance(spec.source, GeneratorSpec):
        inst = planted_instance(spec.source, seed)
        return inst.ps, inst.outlier_indices
    return load_points_csv(spec.source), None


def _run_one(spec: ExperimentSpec, algo: str, seed: int) -> dict:
    ps, injected = _fresh_instance(spec, seed)
    params = ParamSet(k=spec.k, z=spec.z, n=ps.n, eps=spec.eps, eta=spec.eta, mu=spec.mu, seed=seed)
    rng = np.random.default_rng(seed)
    rec = {
        "type": "run",
        "algo": algo,
        "seed": int(seed),
        "n": ps.n,
        "dim": ps.dim,
        "instance_hash": ps.content_hash(),
        "k": spec.k,
        "z": spec.z,
        "eps": spec.eps,
        "mu": spec.mu,
        "eta": spec.eta,
    }
    centers = coreset = protocol = None
    evals_before = ps.stats.evals
    t0 = time.perf_counter()
    if algo == "bicriteria":
        centers = bicriteria(ps, greedy_config(params), rng)
    elif algo == "two_approx":
        centers = two_approx_boosted(ps, params, rng)
    elif algo == "sublinear":
        centers = sublinear_bicriteria(ps, greedy_config(params), sublinear_config(params), rng)
    elif algo == "gonzalez":
        centers = gonzalez(ps, params.k, rng)
    elif algo == "charikar":
        centers = charikar_3approx(ps, None, params.k, params.z)
    elif algo == "brute_force":
        oracle = brute_force_opt(ps, params.k, params.z)
        centers = oracle.opt_centers
        rec["r_opt"] = oracle.r_opt
    elif algo == "coreset":
        coreset = build_coreset(ps, params, spec.doubling_dim, rng)
    elif algo == "coreset_auto":
        coreset = build_coreset_auto(ps, params, rng)
    elif algo == "distributed":
        if spec.shards_path is not None:
            blob = json.loads(Path(spec.shards_path).read_text())
            instance = ShardedInstance.from_json(ps, blob)
            protocol = run_protocol(ps, params, instance=instance, doubling_dim=spec.doubling_dim)
        else:
            protocol = run_protocol(ps, params, s=spec.sites, doubling_dim=spec.doubling_dim)
        coreset = protocol.coreset
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    rec["wall_time_s"] = time.perf_counter() - t0
    rec["dist_evals"] = ps.stats.evals - evals_before

    excluded = None
    if centers is not None:
        strict = clustering_cost(ps, centers, params.z, 0.0)
        rec["centers_count"] = len(centers)
        rec["cost_strict"] = strict.radius
        rec["cost_relaxed"] = cost_radius(ps, centers, params.z, params.eps)
        excluded = strict.excluded
    if coreset is not None:
        composed = compose_with_host(coreset, ps, params, _charikar_host)
        rec["coreset_size"] = len(coreset)
        rec["weight_total"] = coreset.total_weight()
        rec["fallback"] = bool(coreset.meta.get("fallback", False))
        rec["map_radius"] = float(coreset.meta.get("map_radius", 0.0))
        rec["composed_radius"] = composed.radius
        excluded = composed.excluded
    if protocol is not None:
        far = int(protocol.coreset.meta["far_count"])
        rec["budgets"] = [int(b) for b in protocol.decision.budgets]
        rec["budget_total"] = int(sum(protocol.decision.budgets))
        rec["threshold_value"] = protocol.decision.value
        rec["threshold_site"] = protocol.decision.site
        rec["points_sent"] = len(protocol.coreset)
        rec["far_points"] = far
        rec["machinery"] = len(protocol.coreset) - far
        rec["ledger"] = protocol.ledger.to_json()
    if injected is not None and injected.size > 0 and excluded is not None:
        hit = len(excluded.intersection(injected.tolist()))
        rec["outlier_recall"] = hit / injected.size
    return rec


def _aggregate(spec: ExperimentSpec, records: list[dict]) -> list[dict]:
    out = []
    for algo in spec.algos:
        rows = [r for r in records if r["algo"] == algo]
        agg: dict = {"type": "aggregate", "algo": algo, "count": len(rows)}
        hashes = {r["instance_hash"] for r in rows}
        agg["instance_hash"] = hashes.pop() if len(hashes) == 1 else None
        for metric in _METRICS:
            vals = [r[metric] for r in rows if metric in r]
            if vals and len(vals) == len(rows):
                agg[f"{metric}_mean"] = float(np.mean(vals))
                agg[f"{metric}_std"] = float(np.std(vals))
        out.append(agg)
    return out


def _write_outputs(out: str, records: list[dict], aggregates: list[dict]) -> tuple[Path, Path]:
    base = out[: -len(".jsonl")] if out.endswith(".jsonl") else out
    jsonl_path = Path(base + ".jsonl")
    csv_path = Path(base + ".csv")
    with jsonl_path.open("w") as fh:
        for rec in records + aggregates:
            fh.write(json.dumps(rec) + "\n")
    columns = ["algo", "count", "instance_hash"]
    for metric in _METRICS:
        key = f"{metric}_mean"
        if any(key in a for a in aggregates):
            columns += [key, f"{metric}_std"]
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for agg in aggregates:
            writer.writerow(agg)
    return jsonl_path, csv_path


def run_experiment(spec: ExperimentSpec, workers: int = 1):
    """Run every (algorithm, seed) pair; returns (records, aggregates) and
    writes them when the spec names an output base path."""
    jobs = [(algo, seed) for algo in spec.algos for seed in spec.seeds]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda j: _run_one(spec, *j), jobs))
    else:
        records = [_run_one(spec, algo, seed) for algo, seed in jobs]
    order = {algo: i for i, algo in enumerate(spec.algos)}
    records.sort(key=lambda r: (order[r["algo"]], r["seed"]))
    aggregates = _aggregate(spec, records)
    if spec.out:
        _write_outputs(spec.out, records, aggregates)
    return records, aggregates
