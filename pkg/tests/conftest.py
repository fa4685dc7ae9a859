import numpy as np
import pytest

from partstd.catalog import RawRecord, angle_bracket_schema, parse_schema

SMALL_SCHEMA = """\
type_filter = angle
bracket_id,label,,,meta,identifier
bracket_type,label,,,meta,type
thickness,continuous,in,0.02,geometry,range=0.03:0.25
angle,continuous,deg,2,geometry,
depth,continuous,in,0.03,geometry,one_sided_upper range=0.5:4
nfast,integer,count,0,hole,range=1:3
hole_d,continuous,in,0.002,hole,range=0.1:0.4
"""


@pytest.fixture
def small_schema():
    return parse_schema(SMALL_SCHEMA)


@pytest.fixture(scope="session")
def angle_schema():
    return angle_bracket_schema(4)


def random_records(schema, m, seed=0, blank_prob=0.1, type_name=None):
    """Uniformly random records over each variable's range (or [0, 1])."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(m):
        vals = []
        for v in schema.value_variables:
            if rng.random() < blank_prob:
                vals.append(None)
            elif v.kind == "integer":
                lo, hi = v.value_range or (0, 3)
                vals.append(float(rng.integers(int(lo), int(hi) + 1)))
            else:
                lo, hi = v.value_range or (0.0, 1.0)
                vals.append(float(rng.uniform(lo, hi)))
        out.append(RawRecord(f"R{i:05d}", type_name or schema.type_filter, tuple(vals)))
    return out


# criterion number -> (status, title, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{status}] {n}. {title}: {detail}")
