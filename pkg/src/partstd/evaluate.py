"""Matching test components against a StandardSet under per-column tolerances."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster import cross_distances
from .errors import GroupAssignmentError, SchemaMismatch
from .preprocess import FeatureMatrix
from .standardize import StandardSet


@dataclass(frozen=True, eq=False)
class MatchResult:
    test_id: str
    nearest_id: str
    nearest_index: int
    error: float
    per_variable: np.ndarray  # |S_k - sigma_k| against the nearest representative
    accepted_id: str | None
    accepted_index: int | None
    failing_columns: tuple[str, ...]  # columns failing the gate against the nearest representative

    @property
    def categorized(self) -> bool:
        return self.accepted_id is not None


@dataclass(frozen=True, eq=False)
class CategorizationReport:
    ids: tuple[str, ...]
    categorized: np.ndarray
    errors: np.ndarray
    results: tuple[MatchResult, ...] = ()
    groups: dict = field(default_factory=dict)
    fuzzy_k: int = 1

    @property
    def n_test(self) -> int:
        return len(self.ids)

    @property
    def n_categorized(self) -> int:
        return int(np.count_nonzero(self.categorized))

    @property
    def n_new(self) -> int:
        return self.n_test - self.n_categorized

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors)) if len(self.errors) else 0.0

    def summary(self) -> dict:
        out = {
            "n_test": self.n_test,
            "categorized": self.n_categorized,
            "new": self.n_new,
            "mean_error": self.mean_error,
            "fuzzy_k": self.fuzzy_k,
        }
        if self.groups:
            out["groups"] = {name: rep.summary() for name, rep in self.groups.items()}
        return out


def per_variable_error(test_row, rep_row, k: int | None = None):
    """Absolute per-column error ``|S_k - sigma_k|``; all columns when ``k`` is None."""
    diff = np.abs(np.asarray(rep_row, dtype=np.float64) - np.asarray(test_row, dtype=np.float64))
    return diff if k is None else float(diff[k])


def _passes(test_rows, rep_rows, tol, one_sided):
    """Column-wise gate, broadcasting over leading axes."""
    surplus = rep_rows - test_rows
    ok_two = np.abs(surplus) <= tol
    ok_one = -surplus <= tol  # an oversize representative passes at any surplus
    return np.where(one_sided, ok_one, ok_two)


def gate(test_row, rep_row, tolerances, one_sided=None) -> bool:
    test_row = np.asarray(test_row, dtype=np.float64)
    tol = np.asarray(tolerances, dtype=np.float64)
    one_sided = np.zeros(len(tol), bool) if one_sided is None else np.asarray(one_sided, bool)
    return bool(np.all(_passes(test_row, np.asarray(rep_row, dtype=np.float64), tol, one_sided)))


def _check_layout(test: FeatureMatrix, S: StandardSet) -> np.ndarray:
    if test.scaler_digest is not None and test.scaler_digest != S.scaler.digest:
        raise SchemaMismatch("test matrix was encoded with a different scaler than the standard set")
    return S.column_indices(test.column_names)


def match(test: FeatureMatrix, S: StandardSet, k: int = 1, tolerance_scale: float = 1.0) -> list[MatchResult]:
    """Inspect the ``k`` nearest representatives of each test row in order of distance.

    The first one passing every column gate is accepted. The reported error is
    always the distance to the nearest representative.
    """
    N = S.n_representatives
    if not 1 <= k <= N:
        raise ValueError(f"fuzzy k must be in [1, {N}], got {k}")
    if tolerance_scale < 0:
        raise ValueError("tolerance_scale must be non-negative")
    cols = _check_layout(test, S)
    T = test.values[:, cols]
    reps = S.representatives
    tol = S.tolerances * tolerance_scale
    dist = cross_distances(T, reps, S.metric)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    cand = reps[order]  # (m, k, d)
    ok = _passes(T[:, None, :], cand, tol, S.one_sided)
    all_ok = ok.all(axis=2)
    names = S.columns
    results = []
    for i in range(T.shape[0]):
        near = int(order[i, 0])
        hit = np.flatnonzero(all_ok[i])
        acc = int(order[i, hit[0]]) if len(hit) else None
        results.append(
            MatchResult(
                test_id=test.ids[i],
                nearest_id=S.rep_ids[near],
                nearest_index=near,
                error=float(dist[i, near]),
                per_variable=per_variable_error(T[i], reps[near]),
                accepted_id=None if acc is None else S.rep_ids[acc],
                accepted_index=acc,
                failing_columns=tuple(names[j] for j in np.flatnonzero(~ok[i, 0])),
            )
        )
    return results


def evaluate(test: FeatureMatrix, S: StandardSet, k: int = 1, tolerance_scale: float = 1.0) -> CategorizationReport:
    results = match(test, S, k, tolerance_scale)
    return CategorizationReport(
        ids=tuple(test.ids),
        categorized=np.array([r.categorized for r in results], dtype=bool),
        errors=np.array([r.error for r in results], dtype=np.float64),
        results=tuple(results),
        fuzzy_k=k,
    )


def evaluate_grouped(
    test: FeatureMatrix,
    S_geometry: StandardSet,
    S_hole: StandardSet,
    k: int = 1,
    tolerance_scale: float = 1.0,
) -> CategorizationReport:
    """Match geometry and hole columns independently; categorized only if both pass."""
    g, h = set(S_geometry.columns), set(S_hole.columns)
    if g & h:
        raise GroupAssignmentError(f"groups overlap on {sorted(g & h)}")
    uncovered = set(test.column_names) - (g | h)
    if uncovered:
        raise GroupAssignmentError(f"columns in neither group: {sorted(uncovered)}")
    rg = evaluate(test, S_geometry, min(k, S_geometry.n_representatives), tolerance_scale)
    rh = evaluate(test, S_hole, min(k, S_hole.n_representatives), tolerance_scale)
    return CategorizationReport(
        ids=tuple(test.ids),
        categorized=rg.categorized & rh.categorized,
        errors=np.sqrt(rg.errors * rg.errors + rh.errors * rh.errors),
        groups={"geometry": rg, "hole": rh},
        fuzzy_k=k,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _result_cells(r: MatchResult) -> list[str]:
    return [
        r.nearest_id,
        r.accepted_id or "",
        _fmt(r.error),
        "1" if r.categorized else "0",
        ";".join(r.failing_columns),
    ]


_CELL_NAMES = ["nearest_id", "accepted_id", "error", "categorized", "failing_columns"]


def write_report(report: CategorizationReport, csv_path: str | Path, json_path: str | Path | None = None) -> None:
    """One CSV row per test component plus an optional JSON summary."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not report.groups:
            w.writerow(["test_id", *_CELL_NAMES])
            for r in report.results:
                w.writerow([r.test_id, *_result_cells(r)])
        else:
            names = list(report.groups)
            w.writerow(
                ["test_id", "categorized", "error"]
                + [f"{g}_{c}" for g in names for c in _CELL_NAMES]
            )
            for i, tid in enumerate(report.ids):
                row = [tid, "1" if report.categorized[i] else "0", _fmt(report.errors[i])]
                for g in names:
                    row += _result_cells(report.groups[g].results[i])
                w.writerow(row)
    if json_path is not None:
        Path(json_path).write_text(json.dumps(report.summary(), indent=1) + "\n", encoding="utf-8")
