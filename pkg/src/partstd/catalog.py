"""Component schema and catalog ingestion.

A schema file is line oriented. Blank lines and ``#`` comments are ignored,
``key = value`` lines set schema-level options (currently only
``type_filter``) and every other line declares one variable::

    name,kind,unit,tolerance,group,flags

``kind`` is ``continuous``, ``integer`` (an integer-categorical variable,
one-hot encoded downstream) or ``label``. ``group`` is ``geometry``, ``hole``
or ``meta``. ``flags`` is a whitespace or ``|`` separated list drawn from
``identifier``, ``type``, ``one_sided_upper`` and ``range=lo:hi`` (a value
range used only by the synthetic generator).

Catalog files are RFC-4180 CSV with a header row of schema names; an empty
cell is a missing value.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, SchemaError

KINDS = ("continuous", "integer", "label")
GROUPS = ("geometry", "hole", "meta")
_KIND_ALIASES = {"integer-categorical": "integer", "int": "integer"}
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: str
    unit: str = ""
    tolerance: float | None = None
    group: str = "meta"
    one_sided_upper: bool = False
    role: str | None = None  # "identifier", "type" or None
    value_range: tuple[float, float] | None = None

    @property
    def is_label(self) -> bool:
        return self.kind == "label"


@dataclass(frozen=True)
class CatalogSchema:
    variables: tuple[VariableSpec, ...]
    type_filter: str

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        validate_schema(self)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def identifier(self) -> VariableSpec:
        return next(v for v in self.variables if v.role == "identifier")

    @property
    def type_column(self) -> VariableSpec:
        return next(v for v in self.variables if v.role == "type")

    @property
    def value_variables(self) -> list[VariableSpec]:
        """Non-label variables, in schema order; these align with RawRecord.values."""
        return [v for v in self.variables if not v.is_label]

    @property
    def extra_labels(self) -> list[VariableSpec]:
        return [v for v in self.variables if v.is_label and v.role is None]

    def variable(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "type_filter": self.type_filter,
            "variables": [
                {
                    "name": v.name,
                    "kind": v.kind,
                    "unit": v.unit,
                    "tolerance": v.tolerance,
                    "group": v.group,
                    "one_sided_upper": v.one_sided_upper,
                    "role": v.role,
                    "value_range": list(v.value_range) if v.value_range else None,
                }
                for v in self.variables
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CatalogSchema":
        variables = []
        for v in d["variables"]:
            vr = v.get("value_range")
            variables.append(
                VariableSpec(
                    name=v["name"],
                    kind=v["kind"],
                    unit=v.get("unit", ""),
                    tolerance=v.get("tolerance"),
                    group=v.get("group", "meta"),
                    one_sided_upper=bool(v.get("one_sided_upper", False)),
                    role=v.get("role"),
                    value_range=tuple(vr) if vr else None,
                )
            )
        return cls(tuple(variables), d["type_filter"])


@dataclass(frozen=True)
class RawRecord:
    id: str
    type: str
    values: tuple[float | None, ...]
    extras: tuple[tuple[str, str], ...] = field(default=())


def validate_schema(schema: CatalogSchema) -> None:
    seen = set()
    for v in schema.variables:
        if not _NAME_RE.match(v.name):
            raise SchemaError(f"variable {v.name!r}: name must be an identifier")
        if v.name in seen:
            raise SchemaError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)
        if v.kind not in KINDS:
            raise SchemaError(f"variable {v.name!r}: unknown kind {v.kind!r}")
        if v.group not in GROUPS:
            raise SchemaError(f"variable {v.name!r}: unknown group {v.group!r}")
        if v.is_label:
            if v.tolerance is not None:
                raise SchemaError(f"variable {v.name!r}: label columns carry no tolerance")
            if v.group != "meta":
                raise SchemaError(f"variable {v.name!r}: label columns belong to group meta")
            if v.one_sided_upper:
                raise SchemaError(f"variable {v.name!r}: one_sided_upper needs a numeric kind")
        else:
            if v.tolerance is None:
                raise SchemaError(f"variable {v.name!r}: missing tolerance")
            if not (v.tolerance >= 0 and math.isfinite(v.tolerance)):
                raise SchemaError(f"variable {v.name!r}: tolerance must be a non-negative number")
            if v.group not in ("geometry", "hole"):
                raise SchemaError(
                    f"variable {v.name!r}: numeric variables must be in group geometry or hole"
                )
            if v.role is not None:
                raise SchemaError(f"variable {v.name!r}: role {v.role!r} requires kind label")
            if v.one_sided_upper and v.kind != "continuous":
                raise SchemaError(f"variable {v.name!r}: one_sided_upper needs kind continuous")
        if v.value_range is not None and not v.value_range[0] <= v.value_range[1]:
            raise SchemaError(f"variable {v.name!r}: empty range {v.value_range}")
    for role in ("identifier", "type"):
        n = sum(v.role == role for v in schema.variables)
        if n != 1:
            raise SchemaError(f"schema needs exactly one {role} column, found {n}")
    if not schema.type_filter:
        raise SchemaError("schema has no type_filter")


def _parse_flags(text: str, lineno: int) -> dict:
    out = {"one_sided_upper": False, "role": None, "value_range": None}
    for tok in re.split(r"[\s|]+", text.strip()):
        if not tok:
            continue
        if tok == "one_sided_upper":
            out["one_sided_upper"] = True
        elif tok in ("identifier", "type"):
            if out["role"] is not None:
                raise ParseError(f"line {lineno}: more than one role flag")
            out["role"] = tok
        elif tok.startswith("range="):
            try:
                lo, hi = (float(x) for x in tok[len("range="):].split(":"))
            except ValueError:
                raise ParseError(f"line {lineno}: bad range flag {tok!r}") from None
            out["value_range"] = (lo, hi)
        else:
            raise ParseError(f"line {lineno}: unknown flag {tok!r}")
    return out


def parse_schema(text: str, source: str = "<string>") -> CatalogSchema:
    options: dict[str, str] = {}
    variables = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and "," not in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key != "type_filter":
                raise ParseError(f"{source}:{lineno}: unknown option {key!r}")
            options[key] = value.strip()
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) == 5:
            fields.append("")
        if len(fields) != 6:
            raise ParseError(
                f"{source}:{lineno}: expected name,kind,unit,tolerance,group,flags; got {len(fields)} fields"
            )
        name, kind, unit, tol, group, flags = fields
        kind = _KIND_ALIASES.get(kind, kind)
        if tol in ("", "-"):
            tolerance = None
        else:
            try:
                tolerance = float(tol)
            except ValueError:
                raise ParseError(f"{source}:{lineno}: tolerance {tol!r} is not a number") from None
        try:
            fl = _parse_flags(flags, lineno)
        except ParseError as exc:
            raise ParseError(f"{source}:{exc}") from None
        variables.append(
            VariableSpec(name=name, kind=kind, unit=unit, tolerance=tolerance, group=group, **fl)
        )
    if "type_filter" not in options:
        raise ParseError(f"{source}: missing 'type_filter = <value>' line")
    try:
        return CatalogSchema(tuple(variables), options["type_filter"])
    except SchemaError as exc:
        raise SchemaError(f"{source}: {exc}") from None


def load_schema(path: str | Path) -> CatalogSchema:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text ({exc})") from None
    return parse_schema(text, source=str(path))


def format_schema(schema: CatalogSchema) -> str:
    def fmt_num(x):
        return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))

    lines = [f"type_filter = {schema.type_filter}"]
    for v in schema.variables:
        flags = []
        if v.role:
            flags.append(v.role)
        if v.one_sided_upper:
            flags.append("one_sided_upper")
        if v.value_range:
            flags.append(f"range={fmt_num(v.value_range[0])}:{fmt_num(v.value_range[1])}")
        tol = "" if v.tolerance is None else fmt_num(v.tolerance)
        lines.append(f"{v.name},{v.kind},{v.unit},{tol},{v.group},{' '.join(flags)}")
    return "\n".join(lines) + "\n"


def _parse_cell(cell: str, var: VariableSpec, where: str) -> float | None:
    if cell == "":
        return None
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(f"{where}: column {var.name!r}: {cell!r} is not numeric") from None
    if not math.isfinite(x):
        raise ParseError(f"{where}: column {var.name!r}: non-finite value {cell!r}")
    if var.kind == "integer" and not x.is_integer():
        raise ParseError(f"{where}: column {var.name!r}: {cell!r} is not an integer")
    return x


def load_catalog(path: str | Path, schema: CatalogSchema) -> list[RawRecord]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        missing = [n for n in schema.names if n not in header]
        unknown = [h for h in header if h not in schema.names]
        if missing or unknown:
            raise ParseError(f"{path}:1: header mismatch; missing {missing}, unknown {unknown}")
        if len(set(header)) != len(header):
            raise ParseError(f"{path}:1: duplicate header names")
        pos = {name: i for i, name in enumerate(header)}
        idx_id = pos[schema.identifier.name]
        idx_type = pos[schema.type_column.name]
        numeric = [(pos[v.name], v) for v in schema.value_variables]
        extras = [(pos[v.name], v.name) for v in schema.extra_labels]
        records = []
        for row in reader:
            where = f"{path}:{reader.line_num}"
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{where}: expected {len(header)} cells, got {len(row)}")
            values = tuple(_parse_cell(row[i], v, where) for i, v in numeric)
            records.append(
                RawRecord(
                    id=row[idx_id],
                    type=row[idx_type],
                    values=values,
                    extras=tuple((name, row[i]) for i, name in extras),
                )
            )
    return records


def _format_value(x: float | None, var: VariableSpec) -> str:
    if x is None:
        return ""
    if var.kind == "integer":
        return str(int(x))
    return repr(float(x))


def write_catalog(path: str | Path, records: Iterable[RawRecord], schema: CatalogSchema) -> None:
    value_pos = {v.name: i for i, v in enumerate(schema.value_variables)}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(schema.names)
        for r in records:
            extras = dict(r.extras)
            row = []
            for v in schema.variables:
                if v.role == "identifier":
                    row.append(r.id)
                elif v.role == "type":
                    row.append(r.type)
                elif v.is_label:
                    row.append(extras.get(v.name, ""))
                else:
                    row.append(_format_value(r.values[value_pos[v.name]], v))
            writer.writerow(row)


def filter_by_type(records: Sequence[RawRecord], schema: CatalogSchema) -> list[RawRecord]:
    return [r for r in records if r.type == schema.type_filter]


# Parameter layout of an angle-bracket catalog: eleven global columns plus seven
# per segment. Tolerances follow common shop values (thickness 0.02 in, angles
# 2 deg, hole diameters 0.002 in, every other length 0.03 in).
_GLOBAL = [
    ("bracket_id", "label", "", None, "meta", "identifier", None),
    ("bracket_type", "label", "", None, "meta", "type", None),
    ("total_length", "continuous", "in", 0.03, "geometry", "", (0.5, 12.0)),
    ("width", "continuous", "in", 0.03, "geometry", "", (0.25, 4.0)),
    ("depth", "continuous", "in", 0.03, "geometry", "one_sided_upper", (0.25, 6.0)),
    ("min_thickness", "continuous", "in", 0.02, "geometry", "", (0.03, 0.25)),
    ("max_thickness", "continuous", "in", 0.02, "geometry", "", (0.03, 0.25)),
    ("num_fastener_groups", "integer", "count", 0, "hole", "", (1, 3)),
    ("num_segments", "integer", "count", 0, "geometry", "", (2, 4)),
    ("total_holes", "integer", "count", 0, "hole", "", (2, 8)),
    ("max_hole_diameter", "continuous", "in", 0.002, "hole", "", (0.1, 0.4)),
]
_SEGMENT = [
    ("length", "continuous", "in", 0.03, "geometry", "", (0.25, 6.0)),
    ("thickness", "continuous", "in", 0.02, "geometry", "", (0.03, 0.25)),
    ("angle", "continuous", "deg", 2.0, "geometry", "", (-90.0, 90.0)),
    ("num_fasteners", "integer", "count", 0, "hole", "", (0, 3)),
    ("max_fastener_diameter", "continuous", "in", 0.002, "hole", "", (0.1, 0.4)),
    ("min_sep_extrusion", "continuous", "in", 0.03, "hole", "", (0.2, 3.0)),
    ("min_sep_length", "continuous", "in", 0.03, "hole", "", (0.2, 3.0)),
]


def angle_bracket_schema(max_segments: int = 4, type_filter: str = "angle") -> CatalogSchema:
    """Angle-bracket layout with ``max_segments`` per-segment blocks (39 columns at 4)."""
    if max_segments < 1:
        raise SchemaError("max_segments must be at least 1")
    rows = list(_GLOBAL)
    for s in range(1, max_segments + 1):
        rows += [(f"seg{s}_{n}", *rest) for n, *rest in _SEGMENT]
    variables = []
    for name, kind, unit, tol, group, flag, vr in rows:
        variables.append(
            VariableSpec(
                name=name,
                kind=kind,
                unit=unit,
                tolerance=None if tol is None else float(tol),
                group=group,
                one_sided_upper=flag == "one_sided_upper",
                role=flag if flag in ("identifier", "type") else None,
                value_range=None if vr is None else (float(vr[0]), float(vr[1])),
            )
        )
    return CatalogSchema(tuple(variables), type_filter)


def sample_schema_path() -> Path:
    return Path(str(resources.files("partstd") / "data" / "sample.schema"))
