"""Training-side pipeline shared by the sweep harness and the CLI.

``train`` fits the scaler on the training records only, encodes them and
builds one dendrogram per column space (all columns, or geometry and hole
separately). Standard sets for any cluster count are then cut from those
dendrograms without reclustering.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .catalog import CatalogSchema, RawRecord
from .cluster import EUCLIDEAN, Dendrogram, MetricSpec, cut, linkage, paired_distances, pairwise_distances
from .evaluate import CategorizationReport, evaluate, evaluate_grouped
from .preprocess import FeatureMatrix, Scaler, fit_scaler, transform
from .standardize import StandardSet, build_standard_set

GROUPS = ("geometry", "hole")


@dataclass(eq=False)
class Space:
    name: str
    columns: np.ndarray
    X: FeatureMatrix
    metric: MetricSpec
    distances: np.ndarray  # square
    tree: Dendrogram


@dataclass(eq=False)
class TrainedModel:
    scaler: Scaler
    X: FeatureMatrix
    spaces: dict[str, Space]
    method: str
    seed: int | None = None

    @property
    def grouped(self) -> bool:
        return "all" not in self.spaces

    def standard_sets(self, n_clusters: int, provenance: dict | None = None) -> dict[str, StandardSet]:
        out = {}
        for name, sp in self.spaces.items():
            P = cut(sp.tree, n_clusters)
            prov = {"linkage": self.method, "seed": self.seed, "group": name}
            prov.update(provenance or {})
            out[name] = build_standard_set(
                sp.X, P, self.scaler, None, sp.metric, distances=sp.distances, provenance=prov
            )
        return out

    def within_error(self, n_clusters: int, sets: dict[str, StandardSet]) -> dict[str, float]:
        """Mean distance of each training row to its cluster's representative, per space.

        For grouped models ``"all"`` combines both spaces as sqrt(d_g^2 + d_h^2).
        """
        per_row = {}
        for name, sp in self.spaces.items():
            P = cut(sp.tree, n_clusters)
            per_row[name] = paired_distances(
                sp.X.values, sets[name].representatives[P.labels], sp.metric
            )
        out = {name: float(np.mean(d)) for name, d in per_row.items()}
        if self.grouped:
            g, h = per_row["geometry"], per_row["hole"]
            out["all"] = float(np.mean(np.sqrt(g * g + h * h)))
        return out


def resolve_metric(metric: MetricSpec | Mapping[str, float] | None, X: FeatureMatrix) -> MetricSpec:
    """Turn name-keyed weights into a MetricSpec for the columns of ``X``.

    Keys may be encoded column names or source variable names (applying to every
    one-hot column of that variable); unnamed columns get weight 1.
    """
    if metric is None:
        return EUCLIDEAN
    if isinstance(metric, MetricSpec):
        if metric.weights is not None and len(metric.weights) != X.shape[1]:
            raise ValueError(f"metric has {len(metric.weights)} weights for {X.shape[1]} columns")
        return metric
    known = {c.name for c in X.columns} | {c.source for c in X.columns}
    unknown = sorted(set(metric) - known)
    if unknown:
        raise ValueError(f"metric weights name unknown columns {unknown}")
    w = [metric.get(c.name, metric.get(c.source, 1.0)) for c in X.columns]
    return MetricSpec(np.array(w, dtype=np.float64))


def train(
    records: Sequence[RawRecord],
    schema: CatalogSchema,
    method: str = "ward",
    metric: MetricSpec | Mapping[str, float] | None = EUCLIDEAN,
    grouped: bool = False,
    seed: int | None = None,
) -> TrainedModel:
    scaler = fit_scaler(records, schema)
    X = transform(records, scaler)
    metric = resolve_metric(metric, X)
    if grouped:
        col_sets = {g: X.group_columns(g) for g in GROUPS}
        empty = [g for g, c in col_sets.items() if len(c) == 0]
        if empty:
            raise ValueError(f"grouped clustering needs columns in every group; none in {empty}")
    else:
        col_sets = {"all": np.arange(X.shape[1])}
    spaces = {}
    for name, cols in col_sets.items():
        Xs = X.take_columns(cols)
        ms = metric.subset(cols)
        D = pairwise_distances(Xs, ms)
        spaces[name] = Space(name, cols, Xs, ms, D.square(), linkage(D, method))
    return TrainedModel(scaler, X, spaces, method, seed)


def evaluate_sets(
    test: FeatureMatrix, sets: dict[str, StandardSet], k: int = 1, tolerance_scale: float = 1.0
) -> CategorizationReport:
    if "all" in sets:
        S = sets["all"]
        return evaluate(test, S, min(k, S.n_representatives), tolerance_scale)
    return evaluate_grouped(test, sets["geometry"], sets["hole"], k, tolerance_scale)
