"""Encoding and scaling of raw records into a numeric feature matrix.

Blank cells become 0, integer-categorical variables are one-hot encoded
(categories sorted by value), and every encoded column is divided by its
population standard deviation over the fitting records. Columns are not
centred. Constant columns keep a scale factor of 1.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .catalog import CatalogSchema, RawRecord
from .errors import InsufficientData, SchemaMismatch


@dataclass(frozen=True)
class OneHotMap:
    source: str
    categories: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"{self.source}: duplicate categories")

    @property
    def columns(self) -> list[str]:
        return [f"{self.source}={_fmt_category(c)}" for c in self.categories]


def _fmt_category(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    source: str
    group: str
    kind: str  # "continuous" or "onehot"
    category: float | None = None


class NormalizedTolerances(NamedTuple):
    values: np.ndarray
    one_sided: np.ndarray


@dataclass(frozen=True, eq=False)
class Scaler:
    """Fitted encoding: column layout, one-hot maps and per-column scale factors."""

    schema: CatalogSchema
    columns: tuple[ColumnInfo, ...]
    factors: np.ndarray
    onehot: tuple[OneHotMap, ...]

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=np.float64).copy()
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)
        if f.shape != (len(self.columns),):
            raise ValueError("one scale factor per encoded column is required")
        if not np.all(f > 0):
            raise ValueError("scale factors must be strictly positive")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "columns": [c.name for c in self.columns],
            "factors": [float(x) for x in self.factors],
            "onehot": [
                {"source": m.source, "categories": [float(c) for c in m.categories]}
                for m in self.onehot
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        schema = CatalogSchema.from_dict(d["schema"])
        onehot = tuple(OneHotMap(m["source"], tuple(m["categories"])) for m in d["onehot"])
        columns = _layout(schema, {m.source: m for m in onehot})
        if [c.name for c in columns] != list(d["columns"]):
            raise SchemaMismatch("stored column order does not match the schema and one-hot maps")
        return cls(schema, tuple(columns), np.array(d["factors"], dtype=np.float64), onehot)

    @cached_property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Scaler):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    ids: tuple[str, ...]
    columns: tuple[ColumnInfo, ...]
    tolerances: np.ndarray
    one_sided: np.ndarray
    scaler_digest: str | None = None
    raw: tuple[RawRecord, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tolerances", np.asarray(self.tolerances, dtype=np.float64))
        object.__setattr__(self, "one_sided", np.asarray(self.one_sided, dtype=bool))
        m, d = v.shape
        if len(self.ids) != m:
            raise SchemaMismatch(f"{len(self.ids)} ids for {m} rows")
        if not (len(self.columns) == d == len(self.tolerances) == len(self.one_sided)):
            raise SchemaMismatch("column metadata does not match the matrix width")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def groups(self) -> list[str]:
        return [c.group for c in self.columns]

    def take_rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureMatrix(
            self.values[idx],
            tuple(self.ids[i] for i in idx),
            self.columns,
            self.tolerances,
            self.one_sided,
            self.scaler_digest,
            None if self.raw is None else tuple(self.raw[i] for i in idx),
        )

    def take_columns(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureMatrix(
            self.values[:, idx],
            self.ids,
            tuple(self.columns[i] for i in idx),
            self.tolerances[idx],
            self.one_sided[idx],
            self.scaler_digest,
            self.raw,
        )

    def group_columns(self, group: str) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.columns) if c.group == group], dtype=np.intp)

    def select_group(self, group: str) -> "FeatureMatrix":
        return self.take_columns(self.group_columns(group))


def _layout(schema: CatalogSchema, maps: dict[str, OneHotMap]) -> list[ColumnInfo]:
    cols = []
    for v in schema.value_variables:
        if v.kind == "integer":
            for name, cat in zip(maps[v.name].columns, maps[v.name].categories):
                cols.append(ColumnInfo(name, v.name, v.group, "onehot", float(cat)))
        else:
            cols.append(ColumnInfo(v.name, v.name, v.group, "continuous"))
    return cols


def _dense(records: Sequence[RawRecord], n_values: int) -> np.ndarray:
    """Raw values as a float matrix with blanks set to 0."""
    out = np.zeros((len(records), n_values), dtype=np.float64)
    for i, r in enumerate(records):
        if len(r.values) != n_values:
            raise SchemaMismatch(f"record {r.id!r}: {len(r.values)} values, expected {n_values}")
        out[i] = [0.0 if x is None else x for x in r.values]
    return out


def _encode(records: Sequence[RawRecord], schema: CatalogSchema, maps: dict[str, OneHotMap]) -> np.ndarray:
    variables = schema.value_variables
    raw = _dense(records, len(variables))
    blocks = []
    for j, v in enumerate(variables):
        col = raw[:, j]
        if v.kind == "integer":
            cats = np.asarray(maps[v.name].categories, dtype=np.float64)
            blocks.append((col[:, None] == cats[None, :]).astype(np.float64))
        else:
            blocks.append(col[:, None])
    if not blocks:
        return np.zeros((len(records), 0))
    return np.hstack(blocks)


def fit_scaler(records: Sequence[RawRecord], schema: CatalogSchema) -> Scaler:
    if len(records) < 2:
        raise InsufficientData(f"need at least 2 records to fit a scaler, got {len(records)}")
    variables = schema.value_variables
    raw = _dense(records, len(variables))
    maps = {}
    for j, v in enumerate(variables):
        if v.kind == "integer":
            maps[v.name] = OneHotMap(v.name, tuple(float(c) for c in np.unique(raw[:, j])))
    columns = _layout(schema, maps)
    enc = _encode(records, schema, maps)
    factors = enc.std(axis=0)
    constant = enc.max(axis=0) == enc.min(axis=0)
    factors[constant] = 1.0
    return Scaler(schema, tuple(columns), factors, tuple(maps.values()))


def normalized_tolerances(scaler: Scaler, schema: CatalogSchema | None = None) -> NormalizedTolerances:
    """Raw tolerances divided by each column's scale factor; one-hot columns get 0."""
    schema = schema or scaler.schema
    tol = np.zeros(len(scaler.columns))
    one_sided = np.zeros(len(scaler.columns), dtype=bool)
    for i, c in enumerate(scaler.columns):
        if c.kind == "onehot":
            continue
        v = schema.variable(c.source)
        tol[i] = v.tolerance / scaler.factors[i]
        one_sided[i] = v.one_sided_upper
    return NormalizedTolerances(tol, one_sided)


def transform(records: Sequence[RawRecord], scaler: Scaler) -> FeatureMatrix:
    maps = {m.source: m for m in scaler.onehot}
    enc = _encode(records, scaler.schema, maps)
    if enc.shape[1] != len(scaler.columns):
        raise SchemaMismatch("encoded width differs from the scaler's column layout")
    tol = normalized_tolerances(scaler)
    return FeatureMatrix(
        enc / scaler.factors,
        tuple(r.id for r in records),
        scaler.columns,
        tol.values,
        tol.one_sided,
        scaler.digest,
        tuple(records),
    )
