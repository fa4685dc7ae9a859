"""Agglomerative hierarchical clustering: distances, linkage, dendrogram cuts."""
from ._backend import BACKEND
from .core import (
    EUCLIDEAN,
    METHODS,
    Dendrogram,
    DistanceMatrix,
    MetricSpec,
    Partition,
    canonical_labels,
    cross_distances,
    cut,
    linkage,
    paired_distances,
    pairwise_distances,
    within_cluster_error,
)

__all__ = [
    "BACKEND",
    "EUCLIDEAN",
    "METHODS",
    "Dendrogram",
    "DistanceMatrix",
    "MetricSpec",
    "Partition",
    "canonical_labels",
    "cross_distances",
    "cut",
    "linkage",
    "paired_distances",
    "pairwise_distances",
    "within_cluster_error",
]
