"""Synthetic catalogs with planted prototype structure.

Each prototype is drawn from the schema's value ranges; its records copy it
with bounded Gaussian noise on continuous variables and occasional re-draws of
integer variables. A fraction of records are drawn independently (singletons,
ground-truth label -1), and filler records of other types can be mixed in.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import CatalogSchema, RawRecord, VariableSpec

ANGLE_UNITS = {"deg", "degree", "degrees"}
_DEFAULT_INT_RANGE = (0.0, 3.0)
_DEFAULT_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class GeneratorConfig:
    schema: CatalogSchema
    n_prototypes: int = 25
    n_records: int = 1963
    sizes: tuple[int, ...] | None = None  # explicit records per prototype; overrides n_records
    size_skew: float = 1.0
    min_size: int = 2
    noise_fraction: float = 0.4  # noise bound as a fraction of each variable's tolerance
    noise_scale: dict[str, float] = field(default_factory=dict)  # raw-unit bounds, per variable
    mutation_prob: float = 0.0
    singleton_fraction: float = 0.05
    blank_prob: float = 0.0
    angle_pool: tuple[float, ...] = (-90.0, 0.0, 90.0)
    angle_jitter: float = 5.0
    other_types: dict[str, int] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.n_prototypes < 1:
            raise ValueError("need at least one prototype")
        for name in ("mutation_prob", "singleton_fraction", "blank_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.noise_fraction < 0 or any(v < 0 for v in self.noise_scale.values()):
            raise ValueError("noise scales must be non-negative")
        if self.sizes is not None:
            if len(self.sizes) != self.n_prototypes or min(self.sizes) < 1:
                raise ValueError("sizes needs one positive count per prototype")
        elif self.n_records < self.n_prototypes * self.min_size:
            raise ValueError("n_records too small for n_prototypes * min_size")
        unknown = set(self.noise_scale) - {v.name for v in self.schema.value_variables}
        if unknown:
            raise ValueError(f"noise_scale names unknown variables {sorted(unknown)}")


def skewed_sizes(k: int, total: int, skew: float, min_size: int, rng: np.random.Generator) -> np.ndarray:
    """Cluster sizes summing to ``total``: ``min_size`` each plus a Zipf-weighted share of the rest."""
    weights = 1.0 / np.arange(1, k + 1) ** skew
    extra = rng.multinomial(total - k * min_size, weights / weights.sum())
    return rng.permutation(min_size + extra)


def _is_angle(v: VariableSpec) -> bool:
    return v.unit.strip().lower() in ANGLE_UNITS


def _draw_value(v: VariableSpec, rng: np.random.Generator, cfg: GeneratorConfig) -> float:
    if v.kind == "integer":
        lo, hi = v.value_range or _DEFAULT_INT_RANGE
        return float(rng.integers(int(np.ceil(lo)), int(np.floor(hi)) + 1))
    if _is_angle(v) and cfg.angle_pool:
        base = cfg.angle_pool[rng.integers(len(cfg.angle_pool))]
        return float(base + rng.uniform(-cfg.angle_jitter, cfg.angle_jitter))
    lo, hi = v.value_range or _DEFAULT_RANGE
    return float(rng.uniform(lo, hi))


def _draw_record(variables, rng, cfg, blanks: bool) -> list[float | None]:
    out = []
    for v in variables:
        if blanks and rng.random() < cfg.blank_prob:
            out.append(None)
        else:
            out.append(_draw_value(v, rng, cfg))
    return out


def generate(cfg: GeneratorConfig) -> tuple[list[RawRecord], list[int]]:
    """Records in shuffled order and the prototype index of each (-1 if none)."""
    rng = np.random.default_rng(cfg.seed)
    schema = cfg.schema
    variables = schema.value_variables
    bounds = np.array(
        [
            cfg.noise_scale.get(v.name, cfg.noise_fraction * v.tolerance) if v.kind == "continuous" else 0.0
            for v in variables
        ]
    )

    if cfg.sizes is not None:
        sizes = np.asarray(cfg.sizes)
        n_single = int(round(cfg.singleton_fraction * sizes.sum() / max(1e-12, 1 - cfg.singleton_fraction)))
    else:
        n_single = int(round(cfg.singleton_fraction * cfg.n_records))
        sizes = skewed_sizes(cfg.n_prototypes, cfg.n_records - n_single, cfg.size_skew, cfg.min_size, rng)

    prototypes = [_draw_record(variables, rng, cfg, blanks=True) for _ in range(cfg.n_prototypes)]

    rows: list[tuple[str, list, int]] = []
    for p, (proto, size) in enumerate(zip(prototypes, sizes)):
        for _ in range(int(size)):
            # bounded noise: Gaussian with sd = bound/2, clipped to the bound
            noise = np.clip(rng.normal(0.0, 0.5, len(variables)), -1.0, 1.0) * bounds
            vals = []
            for j, v in enumerate(variables):
                x = proto[j]
                if x is None:
                    vals.append(None)
                elif v.kind == "integer":
                    vals.append(_draw_value(v, rng, cfg) if rng.random() < cfg.mutation_prob else x)
                else:
                    vals.append(float(x + noise[j]))
            rows.append((schema.type_filter, vals, p))
    for _ in range(n_single):
        rows.append((schema.type_filter, _draw_record(variables, rng, cfg, blanks=True), -1))
    for type_name in sorted(cfg.other_types):
        for _ in range(cfg.other_types[type_name]):
            rows.append((type_name, _draw_record(variables, rng, cfg, blanks=True), -1))

    order = rng.permutation(len(rows))
    width = max(5, len(str(len(rows))))
    records, labels = [], []
    for n, i in enumerate(order):
        type_name, vals, label = rows[i]
        records.append(RawRecord(id=f"B{n + 1:0{width}d}", type=type_name, values=tuple(vals)))
        labels.append(label)
    return records, labels


def write_ground_truth(path: str | Path, records: Sequence[RawRecord], labels: Sequence[int]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "prototype"])
        for r, lab in zip(records, labels):
            w.writerow([r.id, lab])


def read_ground_truth(path: str | Path) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["record_id"]: int(row["prototype"]) for row in csv.DictReader(fh)}
