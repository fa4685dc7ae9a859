import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_records
from partstd.catalog import parse_schema
from partstd.cluster import cut, linkage, pairwise_distances
from partstd.errors import GroupAssignmentError, SchemaMismatch
from partstd.evaluate import evaluate, evaluate_grouped, gate, match, per_variable_error, write_report
from partstd.preprocess import FeatureMatrix, fit_scaler, transform
from partstd.standardize import StandardSet, build_standard_set

# a, b: geometry (b one-sided), c: hole
ABC = """\
type_filter = t
id,label,,,meta,identifier
kind,label,,,meta,type
a,continuous,in,1,geometry,
b,continuous,in,1,geometry,one_sided_upper
c,continuous,in,1,hole,
"""
SCHEMA = parse_schema(ABC)
SCALER = fit_scaler(random_records(SCHEMA, 5, blank_prob=0), SCHEMA)
COLS = ("a", "b", "c")
GROUPS = ("geometry", "geometry", "hole")


def make_set(reps, tol=(1.0, 1.0, 1.0), cols=(0, 1, 2)):
    cols = list(cols)
    reps = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    return StandardSet(
        representatives=reps,
        rep_ids=tuple(f"S{i}" for i in range(len(reps))),
        raw_representatives=tuple({} for _ in reps),
        columns=tuple(COLS[j] for j in cols),
        tolerances=np.asarray(tol, dtype=np.float64)[cols],
        one_sided=np.array([False, True, False])[cols],
        groups=tuple(GROUPS[j] for j in cols),
        scaler=SCALER,
    )


def make_test(rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return FeatureMatrix(
        rows,
        tuple(f"T{i}" for i in range(len(rows))),
        SCALER.columns,
        np.ones(3),
        np.array([False, True, False]),
    )


# --- gate and per-variable error ---------------------------------------------

def test_per_variable_error():
    assert per_variable_error([1.0, 2.0], [1.5, 0.0]).tolist() == [0.5, 2.0]
    assert per_variable_error([1.0, 2.0], [1.5, 0.0], 1) == 2.0


def test_identical_row_passes_gate():
    row = [0.3, 0.4, 0.5]
    assert gate(row, row, [0.0, 0.0, 0.0])


def test_onehot_mismatch_fails():
    assert not gate([1.0, 0.0], [0.0, 1.0], [0.0, 0.0])


def test_two_sided_boundaries():
    assert gate([0.0], [1.0], [1.0])
    assert gate([1.0], [0.0], [1.0])
    assert not gate([0.0], [1.0 + 1e-9], [1.0])


def test_one_sided_depth():
    tau = 0.25  # exactly representable, so the boundary case is exact
    # representative deeper than the test part by 10 tau: fine
    assert gate([1.0], [1.0 + 10 * tau], [tau], [True])
    # representative shallower by 2 tau: rejected
    assert not gate([1.0], [1.0 - 2 * tau], [tau], [True])
    assert gate([1.0], [1.0 - tau], [tau], [True])
    # the same shortage is symmetric when two-sided
    assert not gate([1.0], [1.0 + 10 * tau], [tau], [False])


def test_zero_tolerance_means_exact_equality():
    assert gate([2.0], [2.0], [0.0])
    assert not gate([2.0], [2.0 + 1e-15], [0.0])


# --- matching -----------------------------------------------------------------

def test_exact_member_is_categorized():
    S = make_set([[0.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
    (r,) = match(make_test([[5.0, 5.0, 5.0]]), S)
    assert r.categorized and r.accepted_id == "S1" and r.error == 0.0
    assert r.failing_columns == ()


def test_fuzzy_k_finds_farther_passing_rep():
    # S0 is nearest but fails column a; S1 is farther and passes everything
    S = make_set([[1.5, 0.0, 0.0], [0.9, 0.9, 0.9]])
    T = make_test([[0.0, 0.0, 0.0]])
    (r1,) = match(T, S, k=1)
    assert not r1.categorized
    assert r1.nearest_id == "S0" and r1.failing_columns == ("a",)
    (r2,) = match(T, S, k=2)
    assert r2.categorized and r2.accepted_id == "S1"
    # error stays measured to the nearest representative
    assert r2.error == r1.error == 1.5
    assert r2.per_variable.tolist() == [1.5, 0.0, 0.0]


def test_fuzzy_k_bounds():
    S = make_set([[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        match(make_test([[0, 0, 0]]), S, k=0)
    with pytest.raises(ValueError):
        match(make_test([[0, 0, 0]]), S, k=2)


def test_distance_ties_use_lower_index():
    S = make_set([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    (r,) = match(make_test([[0.0, 0.0, 0.0]]), S)
    assert r.nearest_id == "S0"


def test_report_counts():
    S = make_set([[0.0, 0.0, 0.0]])
    rep = evaluate(make_test([[0, 0, 0], [0, 0, 5], [0.5, 0, 0]]), S)
    assert rep.categorized.tolist() == [True, False, True]
    assert (rep.n_categorized, rep.n_new, rep.n_test) == (2, 1, 3)
    assert rep.mean_error == pytest.approx((0 + 5 + 0.5) / 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8))
def test_categorized_count_monotone_in_k_and_tolerance(seed, n_reps):
    rng = np.random.default_rng(seed)
    S = make_set(rng.normal(size=(n_reps, 3)))
    T = make_test(rng.normal(size=(30, 3)))
    counts = [evaluate(T, S, k).n_categorized for k in range(1, n_reps + 1)]
    assert counts == sorted(counts)
    scales = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
    counts = [evaluate(T, S, 1, s).n_categorized for s in scales]
    assert counts == sorted(counts)
    assert evaluate(T, S, n_reps, 1e9).n_categorized == 30


def test_per_variable_errors_compose():
    rng = np.random.default_rng(2)
    S = make_set(rng.normal(size=(4, 3)))
    for r in match(make_test(rng.normal(size=(20, 3))), S):
        assert r.error ** 2 == pytest.approx(float(np.sum(r.per_variable ** 2)), rel=1e-12)


def test_scaler_mismatch_rejected(small_schema):
    recs = random_records(small_schema, 20, seed=1)
    sc = fit_scaler(recs, small_schema)
    X = transform(recs, sc)
    S = build_standard_set(X, cut(linkage(pairwise_distances(X)), 3), sc)
    other = fit_scaler(random_records(small_schema, 20, seed=2), small_schema)
    with pytest.raises(SchemaMismatch):
        evaluate(transform(recs, other), S)
    assert evaluate(X, S).n_test == 20


# --- grouped ------------------------------------------------------------------

def test_grouped_is_conjunction():
    Sg = make_set([[0.0, 0.0]], cols=(0, 1))
    Sh = make_set([[0.0]], cols=(2,))
    T = make_test([[0, 0, 0], [5, 0, 0], [0, 0, 5], [5, 0, 5]])
    rep = evaluate_grouped(T, Sg, Sh)
    assert rep.groups["geometry"].categorized.tolist() == [True, False, True, False]
    assert rep.groups["hole"].categorized.tolist() == [True, True, False, False]
    assert rep.categorized.tolist() == [True, False, False, False]
    assert rep.errors.tolist() == [0.0, 5.0, 5.0, pytest.approx(np.sqrt(50))]


def test_grouped_coverage_checks():
    Sg = make_set([[0.0, 0.0]], cols=(0, 1))
    T = make_test([[0, 0, 0]])
    with pytest.raises(GroupAssignmentError, match="neither"):
        evaluate_grouped(T, make_set([[0.0]], cols=(0,)), make_set([[0.0]], cols=(2,)))
    with pytest.raises(GroupAssignmentError, match="overlap"):
        evaluate_grouped(T, Sg, make_set([[0.0, 0.0]], cols=(1, 2)))


def test_write_report(tmp_path):
    S = make_set([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]])
    rep = evaluate(make_test([[0, 0, 0], [0, 0, 9]]), S, k=2)
    write_report(rep, tmp_path / "r.csv", tmp_path / "r.json")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [r["categorized"] for r in rows] == ["1", "0"]
    assert rows[1]["nearest_id"] == "S1"
    assert rows[1]["failing_columns"] == "a;c"  # b is one-sided and S1 is deeper
    assert rows[1]["accepted_id"] == ""
    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary["categorized"] == 1 and summary["new"] == 1


def test_write_grouped_report(tmp_path):
    rep = evaluate_grouped(
        make_test([[0, 0, 0], [0, 0, 9]]), make_set([[0.0, 0.0]], cols=(0, 1)), make_set([[0.0]], cols=(2,))
    )
    write_report(rep, tmp_path / "r.csv", tmp_path / "r.json")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert rows[1]["geometry_categorized"] == "1" and rows[1]["hole_categorized"] == "0"
    assert rows[1]["categorized"] == "0"
    assert set(json.loads((tmp_path / "r.json").read_text())["groups"]) == {"geometry", "hole"}
