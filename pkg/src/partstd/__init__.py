"""Standardize a catalog of parametrized components by hierarchical clustering.

Pipeline: ``catalog`` (schema + ingestion) -> ``preprocess`` (blank fill,
one-hot, unit variance) -> ``cluster`` (distances, linkage, cuts) ->
``standardize`` (medoid representatives) -> ``evaluate`` (tolerance-gated
matching) -> ``sweep`` (cross-validated cluster-count sweeps).
"""

__version__ = "0.1.0"
