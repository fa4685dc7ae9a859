from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch
from ._backend import kernels
from ._pykernels import AVERAGE, COMPLETE, SINGLE, WARD, cross_dist, paired_dist

METHODS = {"single": SINGLE, "complete": COMPLETE, "average": AVERAGE, "ward": WARD}


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """Euclidean metric, optionally weighted by a non-negative diagonal."""

    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).copy()
            if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("metric weights must be a finite non-negative vector")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def kind(self) -> str:
        return "euclidean" if self.weights is None else "weighted-euclidean"

    def weight_vector(self, n_columns: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(n_columns)
        if len(self.weights) != n_columns:
            raise DimensionMismatch(f"{len(self.weights)} metric weights for {n_columns} columns")
        return self.weights

    def subset(self, idx) -> "MetricSpec":
        if self.weights is None:
            return self
        return MetricSpec(self.weights[np.asarray(idx, dtype=np.intp)])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": None if self.weights is None else [float(x) for x in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSpec":
        return cls(None if d.get("weights") is None else np.array(d["weights"]))

    def __eq__(self, other):
        if not isinstance(other, MetricSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


EUCLIDEAN = MetricSpec()


def _matrix(X) -> np.ndarray:
    values = getattr(X, "values", X)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionMismatch("expected a 2-D feature matrix")
    return values


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Pairwise distances in condensed upper-triangle order (row-major, i < j)."""

    m: int
    condensed: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.condensed, dtype=np.float64)
        if c.shape != (self.m * (self.m - 1) // 2,):
            raise DimensionMismatch(f"condensed length {c.shape} does not fit {self.m} points")
        c.setflags(write=False)
        object.__setattr__(self, "condensed", c)

    def index(self, i: int, j: int) -> int:
        if i == j:
            raise IndexError("diagonal entries are not stored")
        if i > j:
            i, j = j, i
        return self.m * i - i * (i + 1) // 2 + (j - i - 1)

    def __getitem__(self, ij) -> float:
        i, j = ij
        return 0.0 if i == j else float(self.condensed[self.index(i, j)])

    def square(self) -> np.ndarray:
        out = np.zeros((self.m, self.m))
        i, j = np.triu_indices(self.m, 1)
        out[i, j] = self.condensed
        out[j, i] = self.condensed
        return out


def pairwise_distances(X, metric: MetricSpec = EUCLIDEAN) -> DistanceMatrix:
    values = _matrix(X)
    m, d = values.shape
    if m < 2:
        raise DimensionMismatch("need at least two rows")
    w = metric.weight_vector(d)
    return DistanceMatrix(m, kernels.pdist(values, w))


def cross_distances(A, B, metric: MetricSpec = EUCLIDEAN) -> np.ndarray:
    """Distances from every row of ``A`` to every row of ``B``; same arithmetic as pairwise_distances."""
    a, b = _matrix(A), _matrix(B)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"{a.shape[1]} vs {b.shape[1]} columns")
    return cross_dist(a, b, metric.weight_vector(a.shape[1]))


def paired_distances(A, B, metric: MetricSpec = EUCLIDEAN) -> np.ndarray:
    a, b = _matrix(A), _matrix(B)
    return paired_dist(a, b, metric.weight_vector(a.shape[1]))


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Merge list of an agglomeration.

    Leaves are nodes ``0..m-1``; the ``t``-th merge creates node ``m + t``.
    ``left < right`` for every merge.
    """

    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    height: np.ndarray
    size: np.ndarray
    method: str = "ward"

    def __post_init__(self):
        for name, dtype in (("left", np.int64), ("right", np.int64), ("height", np.float64), ("size", np.int64)):
            a = np.asarray(getattr(self, name), dtype=dtype).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if len(self.left) != max(self.n_leaves - 1, 0):
            raise ValueError("a dendrogram over m leaves has m-1 merges")

    def __len__(self) -> int:
        return len(self.left)

    def merges(self) -> list[tuple[int, int, float, int]]:
        return [
            (int(l), int(r), float(h), int(s))
            for l, r, h, s in zip(self.left, self.right, self.height, self.size)
        ]

    def linkage_matrix(self) -> np.ndarray:
        """(m-1) x 4 array in the layout scipy.cluster.hierarchy uses."""
        return np.column_stack([self.left, self.right, self.height, self.size]).astype(np.float64)

    def to_dict(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "method": self.method,
            "merges": [
                {"left": l, "right": r, "height": h, "size": s} for l, r, h, s in self.merges()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dendrogram":
        ms = d["merges"]
        return cls(
            d["n_leaves"],
            [m["left"] for m in ms],
            [m["right"] for m in ms],
            [m["height"] for m in ms],
            [m["size"] for m in ms],
            d.get("method", "ward"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Dendrogram":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        if not isinstance(other, Dendrogram):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _relabel(n: int, xs, ys, ds, method: str) -> Dendrogram:
    order = np.argsort(ds, kind="stable")
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    sizes = np.empty(n - 1, dtype=np.int64)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for t, k in enumerate(order):
        a, b = find(int(xs[k])), find(int(ys[k]))
        lo, hi = (a, b) if a < b else (b, a)
        new = n + t
        parent[lo] = parent[hi] = new
        size[new] = size[lo] + size[hi]
        left[t], right[t], sizes[t] = lo, hi, size[new]
    return Dendrogram(n, left, right, ds[order], sizes, method)


def linkage(D: DistanceMatrix, method: str = "ward", sizes: Sequence[float] | None = None) -> Dendrogram:
    """Agglomerate by the Lance-Williams recurrence with a nearest-neighbour chain.

    Ward dissimilarities are propagated as squared distances, so a merge of
    clusters p and q is reported at height ``sqrt(2 n_p n_q / (n_p + n_q)) * |c_p - c_q|``.
    ``sizes`` gives initial cluster weights (all 1 by default).
    """
    if method not in METHODS:
        raise ValueError(f"unknown linkage method {method!r}; expected one of {sorted(METHODS)}")
    n = D.m
    sizes = np.ones(n) if sizes is None else np.asarray(sizes, dtype=np.float64)
    if sizes.shape != (n,) or np.any(sizes <= 0):
        raise ValueError("sizes must be one positive weight per point")
    if n == 1:
        return Dendrogram(1, [], [], [], [], method)
    code = METHODS[method]
    d = D.condensed * D.condensed if code == WARD else D.condensed
    xs, ys, ds = kernels.nn_chain(d, sizes, code)
    if code == WARD:
        ds = np.sqrt(np.maximum(ds, 0.0))
    return _relabel(n, xs, ys, ds, method)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster label per leaf, numbered in order of first appearance."""

    n_clusters: int
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64).copy()
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        if len(np.unique(lab)) != self.n_clusters:
            raise ValueError("labels do not form exactly n_clusters non-empty clusters")

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels, minlength=self.n_clusters))[:-1]
        return np.split(order, bounds)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n_clusters == other.n_clusters and np.array_equal(self.labels, other.labels)

    __hash__ = None


def canonical_labels(raw) -> np.ndarray:
    """Renumber arbitrary labels 0, 1, ... by first appearance."""
    mapping: dict = {}
    return np.array([mapping.setdefault(x, len(mapping)) for x in np.asarray(raw).tolist()], dtype=np.int64)


def cut(tree: Dendrogram, n_clusters: int) -> Partition:
    """Partition left after the first ``m - n_clusters`` merges."""
    m = tree.n_leaves
    if not 1 <= n_clusters <= m:
        raise ValueError(f"cluster count must be in [1, {m}], got {n_clusters}")
    parent = np.arange(2 * m - 1)
    for t in range(m - n_clusters):
        parent[tree.left[t]] = m + t
        parent[tree.right[t]] = m + t
    # internal nodes get larger ids than their children, so a reverse sweep resolves roots
    root = parent.copy()
    for node in range(2 * m - 2, -1, -1):
        root[node] = root[root[node]]
    return Partition(n_clusters, canonical_labels(root[:m]))


def within_cluster_error(X, partition: Partition, reps: Sequence[int], metric: MetricSpec = EUCLIDEAN) -> float:
    """Mean distance from each row to the representative of its cluster.

    ``reps[c]`` is the row index representing cluster ``c``.
    """
    values = _matrix(X)
    reps = np.asarray(reps, dtype=np.intp)
    if reps.shape != (partition.n_clusters,):
        raise ValueError("one representative per cluster is required")
    if np.any(partition.labels[reps] != np.arange(partition.n_clusters)):
        raise ValueError("every representative must belong to its own cluster")
    target = values[reps[partition.labels]]
    return float(np.mean(paired_distances(values, target, metric)))
