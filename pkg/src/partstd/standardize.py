"""Medoid representatives and the persistable StandardSet."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster import EUCLIDEAN, DistanceMatrix, MetricSpec, Partition, cross_distances
from .errors import SchemaMismatch
from .preprocess import FeatureMatrix, Scaler

FORMAT = "partstd.standard_set/1"


def _square(distances) -> np.ndarray:
    if isinstance(distances, DistanceMatrix):
        return distances.square()
    return np.asarray(distances, dtype=np.float64)


def select_medoid(X, members: Sequence[int], metric: MetricSpec = EUCLIDEAN, distances=None) -> int:
    """Member with the smallest summed distance to the other members.

    ``distances`` may be a precomputed DistanceMatrix or square array over all
    rows of ``X``. Ties go to the smallest row index.
    """
    members = np.sort(np.asarray(members, dtype=np.intp))
    if len(members) == 0:
        raise ValueError("cannot pick a medoid of an empty cluster")
    if len(members) == 1:
        return int(members[0])
    if distances is None:
        values = getattr(X, "values", X)
        sub = cross_distances(values[members], values[members], metric)
    else:
        sub = _square(distances)[np.ix_(members, members)]
    # sort before summing so equal multisets of distances give equal sums
    sums = np.sort(sub, axis=1).sum(axis=1)
    return int(members[np.argmin(sums)])


def medoids(X, partition: Partition, metric: MetricSpec = EUCLIDEAN, distances=None) -> np.ndarray:
    """Medoid row index of every cluster, indexed by cluster label."""
    sq = None if distances is None else _square(distances)
    return np.array(
        [select_medoid(X, mem, metric, sq) for mem in partition.members()], dtype=np.intp
    )


@dataclass(frozen=True, eq=False)
class StandardSet:
    representatives: np.ndarray  # N x d, normalized units
    rep_ids: tuple[str, ...]
    raw_representatives: tuple[dict, ...]
    columns: tuple[str, ...]
    tolerances: np.ndarray
    one_sided: np.ndarray
    groups: tuple[str, ...]
    scaler: Scaler
    metric: MetricSpec = field(default_factory=MetricSpec)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        reps = np.asarray(self.representatives, dtype=np.float64)
        if reps.ndim != 2 or reps.shape[0] < 1:
            raise ValueError("a standard set needs at least one representative")
        n, d = reps.shape
        object.__setattr__(self, "representatives", reps)
        object.__setattr__(self, "tolerances", np.asarray(self.tolerances, dtype=np.float64))
        object.__setattr__(self, "one_sided", np.asarray(self.one_sided, dtype=bool))
        if len(self.rep_ids) != n or len(self.raw_representatives) != n:
            raise SchemaMismatch("representative ids/raw values do not match the row count")
        if not (len(self.columns) == d == len(self.tolerances) == len(self.one_sided) == len(self.groups)):
            raise SchemaMismatch("column metadata does not match the representative width")
        unknown = set(self.columns) - set(self.scaler.column_names)
        if unknown:
            raise SchemaMismatch(f"columns not produced by the scaler: {sorted(unknown)}")
        self.metric.weight_vector(d)

    @property
    def n_representatives(self) -> int:
        return self.representatives.shape[0]

    def column_indices(self, names: Sequence[str]) -> np.ndarray:
        """Positions of this set's columns within a layout given by ``names``."""
        pos = {n: i for i, n in enumerate(names)}
        missing = [c for c in self.columns if c not in pos]
        if missing:
            raise SchemaMismatch(f"test matrix lacks columns {missing}")
        return np.array([pos[c] for c in self.columns], dtype=np.intp)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "provenance": self.provenance,
            "metric": self.metric.to_dict(),
            "columns": list(self.columns),
            "groups": list(self.groups),
            "tolerances": [float(x) for x in self.tolerances],
            "one_sided": [bool(x) for x in self.one_sided],
            "representatives": [
                {"id": rid, "normalized": [float(x) for x in row], "raw": raw}
                for rid, row, raw in zip(self.rep_ids, self.representatives, self.raw_representatives)
            ],
            "scaler": self.scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardSet":
        if d.get("format") != FORMAT:
            raise SchemaMismatch(f"not a standard set document (format {d.get('format')!r})")
        reps = d["representatives"]
        return cls(
            representatives=np.array([r["normalized"] for r in reps], dtype=np.float64),
            rep_ids=tuple(r["id"] for r in reps),
            raw_representatives=tuple(r["raw"] for r in reps),
            columns=tuple(d["columns"]),
            tolerances=np.array(d["tolerances"], dtype=np.float64),
            one_sided=np.array(d["one_sided"], dtype=bool),
            groups=tuple(d["groups"]),
            scaler=Scaler.from_dict(d["scaler"]),
            metric=MetricSpec.from_dict(d["metric"]),
            provenance=d["provenance"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "StandardSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def __eq__(self, other):
        if not isinstance(other, StandardSet):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _raw_dict(record, scaler: Scaler) -> dict:
    if record is None:
        return {}
    out = {}
    for v, x in zip(scaler.schema.value_variables, record.values):
        out[v.name] = x
    return out


def build_standard_set(
    X: FeatureMatrix,
    partition: Partition,
    scaler: Scaler,
    tolerances=None,
    metric: MetricSpec = EUCLIDEAN,
    *,
    distances=None,
    provenance: dict | None = None,
) -> StandardSet:
    """One medoid per cluster of ``partition``, packaged with what matching needs.

    ``tolerances`` defaults to the normalized tolerances carried by ``X``; it may
    also be a ``(values, one_sided)`` pair.
    """
    m, d = X.shape
    if len(partition.labels) != m:
        raise SchemaMismatch(f"partition over {len(partition.labels)} leaves, matrix has {m} rows")
    if X.scaler_digest is not None and X.scaler_digest != scaler.digest:
        raise SchemaMismatch("feature matrix was not encoded with this scaler")
    if tolerances is None:
        tol, one_sided = X.tolerances, X.one_sided
    else:
        tol, one_sided = tolerances
    tol = np.asarray(tol, dtype=np.float64)
    if tol.shape != (d,):
        raise SchemaMismatch(f"{tol.shape} tolerances for {d} columns")
    idx = medoids(X, partition, metric, distances)
    prov = {"train_size": m, "n_clusters": partition.n_clusters}
    prov.update(provenance or {})
    return StandardSet(
        representatives=X.values[idx],
        rep_ids=tuple(X.ids[i] for i in idx),
        raw_representatives=tuple(
            _raw_dict(None if X.raw is None else X.raw[i], scaler) for i in idx
        ),
        columns=tuple(X.column_names),
        tolerances=tol,
        one_sided=np.asarray(one_sided, dtype=bool),
        groups=tuple(X.groups),
        scaler=scaler,
        metric=metric,
        provenance=prov,
    )
