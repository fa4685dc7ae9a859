"""Repeated random train/test splits swept over cluster counts.

Repeat ``r`` uses seed ``config.seed + r``. One dendrogram per repeat serves
every cluster count in the grid, since cuts of one tree are nested.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import CatalogSchema, RawRecord, filter_by_type
from .cluster import METHODS, MetricSpec
from .pipeline import evaluate_sets, train
from .preprocess import transform


@dataclass(frozen=True)
class SweepConfig:
    grid: tuple[int, ...]
    repeats: int = 50
    test_size: int = 400
    seed: int = 0
    method: str = "ward"
    metric: MetricSpec | dict | None = None  # MetricSpec, or weights keyed by column/variable name
    fuzzy_k: int = 1
    grouped: bool = False
    tolerance_scale: float = 1.0
    jobs: int = 1
    keep_vectors: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.grid)
        if not grid:
            raise ValueError("cluster-count grid is empty")
        if min(grid) < 1:
            raise ValueError("cluster counts must be positive")
        if len(set(grid)) != len(grid):
            raise ValueError("cluster-count grid has duplicates")
        object.__setattr__(self, "grid", tuple(sorted(grid)))
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.test_size < 1:
            raise ValueError("test_size must be at least 1")
        if self.fuzzy_k < 1:
            raise ValueError("fuzzy_k must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown linkage method {self.method!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "repeats": self.repeats,
            "test_size": self.test_size,
            "seed": self.seed,
            "method": self.method,
            "metric": self.metric.to_dict() if isinstance(self.metric, MetricSpec) else self.metric,
            "fuzzy_k": self.fuzzy_k,
            "grouped": self.grouped,
            "tolerance_scale": self.tolerance_scale,
        }


@dataclass(eq=False)
class SweepResult:
    config: SweepConfig
    rows: list[dict]
    aggregates: list[dict]
    test_ids: list[tuple[str, ...]]
    vectors: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def metrics(self) -> list[str]:
        return [k for k in self.rows[0] if k not in ("repeat", "N")]

    def curve(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        """(N values, mean over repeats) for one metric."""
        ns = np.array([a["N"] for a in self.aggregates])
        return ns, np.array([a[f"{metric}_mean"] for a in self.aggregates])


def split(n_rows: int, test_size: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random disjoint (train, test) index arrays, each sorted ascending."""
    if not 0 < test_size < n_rows:
        raise ValueError(f"test size must be in [1, {n_rows - 1}], got {test_size}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return np.sort(perm[test_size:]), np.sort(perm[:test_size])


def _run_repeat(args) -> tuple[list[dict], tuple[str, ...], dict]:
    records, schema, cfg, r = args
    seed = cfg.seed + r
    tr, te = split(len(records), cfg.test_size, seed)
    train_recs = [records[i] for i in tr]
    test_recs = [records[i] for i in te]
    if cfg.grid[-1] > len(train_recs):
        raise ValueError(f"cluster count {cfg.grid[-1]} exceeds training size {len(train_recs)}")
    model = train(train_recs, schema, cfg.method, cfg.metric, cfg.grouped, seed)
    Xte = transform(test_recs, model.scaler)
    rows, vectors = [], {}
    for N in cfg.grid:
        sets = model.standard_sets(N)
        report = evaluate_sets(Xte, sets, cfg.fuzzy_k, cfg.tolerance_scale)
        within = model.within_error(N, sets)
        row = {
            "repeat": r,
            "N": N,
            "mean_error": report.mean_error,
            "B": report.n_categorized,
            "within_error": within["all"],
        }
        for g, sub in report.groups.items():
            row[f"B_{g}"] = sub.n_categorized
            row[f"mean_error_{g}"] = sub.mean_error
            row[f"within_error_{g}"] = within[g]
        rows.append(row)
        if cfg.keep_vectors:
            vectors[(r, N)] = report.categorized.copy()
    return rows, tuple(r_.id for r_ in test_recs), vectors


def _aggregate(rows: list[dict], grid: Sequence[int], repeats: int) -> list[dict]:
    metrics = [k for k in rows[0] if k not in ("repeat", "N")]
    by_n = {N: [None] * repeats for N in grid}
    for row in rows:
        by_n[row["N"]][row["repeat"]] = row
    out = []
    for N in grid:
        agg = {"N": N}
        for m in metrics:
            vals = np.array([row[m] for row in by_n[N]], dtype=np.float64)  # repeat order
            agg[f"{m}_mean"] = float(np.mean(vals))
            agg[f"{m}_std"] = float(np.std(vals))
        out.append(agg)
    return out


def run_sweep(records: Sequence[RawRecord], schema: CatalogSchema, config: SweepConfig) -> SweepResult:
    records = filter_by_type(records, schema)
    tasks = [(records, schema, config, r) for r in range(config.repeats)]
    if config.jobs > 1 and config.repeats > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, config.repeats)) as ex:
            outcomes = list(ex.map(_run_repeat, tasks))
    else:
        outcomes = [_run_repeat(t) for t in tasks]
    rows, test_ids, vectors = [], [], {}
    for rws, ids, vec in outcomes:
        rows.extend(rws)
        test_ids.append(ids)
        vectors.update(vec)
    return SweepResult(config, rows, _aggregate(rows, config.grid, config.repeats), test_ids, vectors)


def min_clusters_for_error(result: SweepResult, budget: float) -> int | None:
    """Smallest grid N whose mean test error is below ``budget``."""
    for agg in result.aggregates:
        if agg["mean_error_mean"] < budget:
            return agg["N"]
    return None


def min_clusters_for_count(result: SweepResult, target: float) -> int | None:
    """Smallest grid N whose mean categorized count reaches ``target``."""
    for agg in result.aggregates:
        if agg["B_mean"] >= target:
            return agg["N"]
    return None


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_sweep(result: SweepResult, csv_path: str | Path, json_path: str | Path | None = None) -> None:
    """Tidy per-(repeat, N) CSV and a JSON summary of per-N aggregates."""
    rows = sorted(result.rows, key=lambda r: (r["repeat"], r["N"]))
    cols = list(rows[0])
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row[c]) for c in cols])
    if json_path is not None:
        doc = {"config": result.config.to_dict(), "aggregates": result.aggregates}
        Path(json_path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
