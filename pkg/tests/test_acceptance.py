"""Acceptance criteria, one test per criterion (criterion 5 has four parts).

Each test records a PASS/FAIL line that the terminal summary prints at the end
of the run, so ``pytest tests/test_acceptance.py`` doubles as the report.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_records
from oracles import medoid_oracle, ward_oracle
from partstd.catalog import RawRecord, angle_bracket_schema, sample_schema_path
from partstd.cli import main
from partstd.cluster import Partition, cut, linkage, pairwise_distances, within_cluster_error
from partstd.evaluate import evaluate, gate
from partstd.pipeline import evaluate_sets, train
from partstd.preprocess import fit_scaler, transform
from partstd.standardize import build_standard_set, medoids, select_medoid
from partstd.sweep import SweepConfig, min_clusters_for_count, run_sweep, split
from partstd.synth import GeneratorConfig, generate

stats = pytest.importorskip("scipy.stats")

SCHEMA = angle_bracket_schema(4)
_PARTS: dict[str, tuple[str, str]] = {}


def _record(key, status, title, detail):
    if key.startswith("5"):
        _PARTS[key] = (status, detail)
        overall = "FAIL" if any(s == "FAIL" for s, _ in _PARTS.values()) else "PASS"
        lines = "; ".join(f"({k[1]}) {s} {d}" for k, (s, d) in sorted(_PARTS.items()))
        ACCEPTANCE[5] = (overall, "monotonicity suite", lines)
    else:
        ACCEPTANCE[int(key)] = (status, title, detail)


@contextmanager
def criterion(key: str, title: str):
    info = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        msg = info["detail"] or str(exc).strip().splitlines()[0][:200]
        _record(key, "FAIL", title, f"{msg} [{time.perf_counter() - t0:.1f}s]")
        raise
    _record(key, "PASS", title, f"{info['detail']} [{time.perf_counter() - t0:.1f}s]")


# ----------------------------------------------------------------------------- 1

def test_1_ward_matches_bruteforce_oracle():
    with criterion("1", "Ward oracle equivalence") as info:
        rng = np.random.default_rng(20240101)
        t0 = time.perf_counter()
        worst = 0.0
        for inst in range(200):
            n, d = int(rng.integers(2, 13)), int(rng.integers(1, 7))
            X = rng.normal(size=(n, d)) * rng.uniform(0.1, 10)
            tree = linkage(pairwise_distances(X), "ward")
            ref = ward_oracle(X)
            ours = tree.merges()
            assert [(l, r) for l, r, _, _ in ours] == [(a, b) for a, b, _ in ref], f"instance {inst}: merge order differs"
            for (_, _, h, _), (_, _, g) in zip(ours, ref):
                rel = abs(h - g) / max(abs(g), 1e-300)
                worst = max(worst, rel)
                assert rel <= 1e-9, f"instance {inst}: height {h} vs {g}"
        elapsed = time.perf_counter() - t0
        info["detail"] = f"200 instances, worst relative height error {worst:.1e}, {elapsed:.2f}s"
        assert elapsed < 10.0


# ----------------------------------------------------------------------------- 2

def test_2_singleton_reduction():
    with criterion("2", "singleton reduction") as info:
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            d = int(rng.integers(1, 40))
            X = rng.normal(size=(2, d)) * 10 ** rng.uniform(-3, 3)
            h = linkage(pairwise_distances(X), "ward").height[0]
            e = math.dist(X[0], X[1])
            err = abs(h - e) / max(e, 1.0)
            worst = max(worst, err)
            assert err <= 1e-12
        info["detail"] = f"1000 pairs, worst error {worst:.1e}"


# ----------------------------------------------------------------------------- 3

def test_3_medoid_matches_exhaustive_argmin():
    with criterion("3", "medoid oracle") as info:
        rng = np.random.default_rng(3)
        for c in range(500):
            size, d = int(rng.integers(1, 51)), int(rng.integers(2, 7))
            X = rng.normal(size=(size + 10, d))
            members = np.sort(rng.choice(size + 10, size, replace=False))
            assert select_medoid(X, members) == medoid_oracle(X, members), f"cluster {c}"
        info["detail"] = "500 clusters of size 1..50, all exact"


# ----------------------------------------------------------------------------- 4

def test_4_degenerate_exactness():
    with criterion("4", "degenerate exactness") as info:
        seen = []
        for m in (10, 200, 1500):
            recs = random_records(SCHEMA, m, seed=m)
            sc = fit_scaler(recs, SCHEMA)
            X = transform(recs, sc)
            D = pairwise_distances(X)
            P = cut(linkage(D, "ward"), m)
            S = build_standard_set(X, P, sc, distances=D)
            rep = evaluate(transform(recs, sc), S)
            seen.append(f"m={m}: B={rep.n_categorized}, E={rep.mean_error}")
            assert rep.n_categorized == m
            assert rep.mean_error == 0.0
        info["detail"] = ", ".join(seen)


# ----------------------------------------------------------------------------- 5

def _random_catalog_matrix(seed, m=80):
    recs = random_records(SCHEMA, m, seed=seed)
    sc = fit_scaler(recs, SCHEMA)
    return recs, sc, transform(recs, sc)


def test_5a_ward_heights_non_decreasing():
    with criterion("5a", "") as info:
        violations = 0
        for seed in range(50):
            _, _, X = _random_catalog_matrix(seed)
            T = linkage(pairwise_distances(X), "ward")
            violations += int(np.count_nonzero(np.diff(T.height) < 0))
            m = T.n_leaves
            for t, (l, r, h, _) in enumerate(T.merges()):
                violations += sum(1 for c in (l, r) if c >= m and T.height[c - m] > h)
        info["detail"] = f"50 dendrograms, {violations} violations"
        assert violations == 0


@pytest.mark.xfail(
    strict=True,
    reason="medoid within-cluster error is not monotone in N in general; "
    "this battery contains a counterexample (seed 36, N=2 -> 3)",
)
def test_5b_medoid_error_non_increasing():
    with criterion("5b", "") as info:
        found = []
        for seed in range(50):
            _, _, X = _random_catalog_matrix(seed)
            D = pairwise_distances(X)
            T, S = linkage(D, "ward"), D.square()
            prev = math.inf
            for n in range(1, X.shape[0] + 1):
                P = cut(T, n)
                e = within_cluster_error(X, P, medoids(X, P, distances=S))
                if e > prev:
                    found.append(f"seed {seed} N={n - 1}->{n}: {prev:.6f}->{e:.6f}")
                prev = e
        info["detail"] = f"50 dendrograms x 80 cuts, {len(found)} violations" + (
            f" ({'; '.join(found)})" if found else ""
        )
        assert not found


def _planted_instance(seed):
    # noise near the tolerance so the nearest representative often fails the gate
    cfg = GeneratorConfig(SCHEMA, n_prototypes=8, n_records=160, noise_fraction=0.8, seed=seed)
    recs, _ = generate(cfg)
    tr, te = split(160, 40, seed)
    sc = fit_scaler([recs[i] for i in tr], SCHEMA)
    X = transform(recs, sc)
    Xtr = X.take_rows(tr)
    P = cut(linkage(pairwise_distances(Xtr)), int(np.random.default_rng(seed).integers(8, 40)))
    return X, X.take_rows(te), build_standard_set(Xtr, P, sc)


def test_5c_categorized_count_non_decreasing_in_k():
    with criterion("5c", "") as info:
        violations = gained = 0
        for seed in range(50):
            _, test, S = _planted_instance(seed)
            prev = None
            for k in range(1, min(10, S.n_representatives) + 1):
                cat = evaluate(test, S, k).categorized
                if prev is not None:
                    violations += int(np.count_nonzero(prev & ~cat))
                    gained += int(np.count_nonzero(cat & ~prev))
                prev = cat
        info["detail"] = f"50 instances, k=1..10, {violations} violations, {gained} records gained by larger k"
        assert violations == 0
        assert gained > 0


def test_5d_gate_monotone_in_tolerance():
    with criterion("5d", "") as info:
        rng = np.random.default_rng(5)
        violations = gained = 0
        scales = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 5.0, 100.0]
        for seed in range(50):
            X, test, S = _planted_instance(seed)
            tol, one_sided = X.tolerances, X.one_sided
            for _ in range(20):
                i, j = rng.choice(X.shape[0], 2, replace=False)
                passes = [gate(X.values[i], X.values[j], tol * s, one_sided) for s in scales]
                violations += sum(1 for a, b in zip(passes, passes[1:]) if a and not b)
            prev = None
            for s in scales:
                cat = evaluate(test, S, 3, s).categorized
                if prev is not None:
                    violations += int(np.count_nonzero(prev & ~cat))
                    gained += int(np.count_nonzero(cat & ~prev))
                prev = cat
        info["detail"] = f"50 instances, {violations} violations, {gained} records gained by loosening"
        assert violations == 0
        assert gained > 0


# ----------------------------------------------------------------------------- 6-8

K = 25
GRID = tuple(range(1, 2 * K + 1)) + tuple(range(75, 1501, 75))


@pytest.fixture(scope="module")
def planted():
    cfg = GeneratorConfig(SCHEMA, n_prototypes=K, n_records=1900, noise_fraction=0.4, singleton_fraction=0.05, seed=7)
    recs, labels = generate(cfg)
    return recs, dict(zip((r.id for r in recs), labels))


@pytest.fixture(scope="module")
def planted_sweep(planted):
    recs, _ = planted
    cfg = SweepConfig(grid=GRID, repeats=10, test_size=400, seed=100, fuzzy_k=5, jobs=4, keep_vectors=True)
    t0 = time.perf_counter()
    result = run_sweep(recs, SCHEMA, cfg)
    return result, time.perf_counter() - t0


def test_6_planted_recovery(planted, planted_sweep):
    with criterion("6", "planted recovery") as info:
        _, truth = planted
        result, elapsed = planted_sweep
        fractions, non_single = [], []
        for r, ids in enumerate(result.test_ids):
            mask = np.array([truth[i] >= 0 for i in ids])
            cat = result.vectors[(r, K)]
            non_single.append(int(mask.sum()))
            fractions.append(float(cat[mask].mean()))
        frac = float(np.mean(fractions))
        target = 0.9 * float(np.mean(non_single))
        n_star = min_clusters_for_count(result, target)
        info["detail"] = (
            f"fraction at N=K: {frac:.4f}, min_clusters_for_count({target:.1f}) = {n_star}, "
            f"sweep {elapsed:.1f}s"
        )
        assert frac >= 0.90
        assert n_star is not None and n_star <= 2 * K
        assert elapsed < 120


def test_7_grouped_conjunction(planted):
    with criterion("7", "grouped conjunction") as info:
        recs, _ = planted
        runs = coincide = strict_subset = 0
        for r in range(10):
            tr, te = split(len(recs), 400, 100 + r)
            model = train([recs[i] for i in tr], SCHEMA, grouped=True, seed=100 + r)
            test = transform([recs[i] for i in te], model.scaler)
            for N in (5, 10, 25, 50, 200):
                rep = evaluate_sets(test, model.standard_sets(N), k=5)
                fail_g = ~rep.groups["geometry"].categorized
                fail_h = ~rep.groups["hole"].categorized
                fail = ~rep.categorized
                cg, ch, c = (int(np.count_nonzero(~x)) for x in (fail_g, fail_h, fail))
                assert np.array_equal(fail, fail_g | fail_h)
                assert c <= min(cg, ch)
                weaker = fail_g if cg <= ch else fail_h
                # equality exactly when the overall failing set is the weaker group's
                assert (c == min(cg, ch)) == np.array_equal(fail, weaker)
                if np.array_equal(fail_g, fail_h):
                    coincide += 1
                    assert c == cg == ch
                elif c == min(cg, ch):
                    strict_subset += 1
                runs += 1

        # one-sided depth: oversize representatives always pass
        depth = SCHEMA.value_variables.index(SCHEMA.variable("depth"))
        fit = fit_scaler(recs[:500], SCHEMA)
        rng = np.random.default_rng(77)
        accepted = rejected = 0
        for case in range(100):
            base = recs[int(rng.integers(len(recs)))]
            d0 = base.values[depth] or 0.0
            surplus = float(rng.uniform(1e-6, 200.0)) * 0.03

            def rep_with_depth(value):
                vals = list(base.values)
                vals[depth] = value
                S = build_standard_set(
                    transform([RawRecord(f"S{case}", base.type, tuple(vals))], fit), Partition(1, [0]), fit
                )
                return evaluate(transform([base], fit), S).categorized[0]

            accepted += int(rep_with_depth(d0 + surplus))
            # control: a representative short by twice the tolerance must be rejected
            rejected += int(not rep_with_depth(d0 - 2 * 0.03))
        info["detail"] = (
            f"{runs} planted (repeat, N) runs; failing sets coincided {coincide}x, "
            f"nested but distinct {strict_subset}x; one-sided fixture {accepted}/100 oversize accepted, "
            f"{rejected}/100 undersize rejected"
        )
        assert accepted == 100
        assert rejected == 100


def test_8_error_curve_decreasing(planted_sweep):
    with criterion("8", "qualitative curve reproduction") as info:
        result, _ = planted_sweep
        ns, err = result.curve("mean_error")
        rho = stats.spearmanr(ns, err).statistic
        info["detail"] = f"Spearman(mean error, N) = {rho:.4f} over {len(ns)} grid points"
        assert rho <= -0.95


# ----------------------------------------------------------------------------- 9

def test_9_cli_determinism(tmp_path):
    with criterion("9", "determinism") as info:
        schema = str(sample_schema_path())
        gen = tmp_path / "gen"
        assert main(["generate", "--schema", schema, "--prototypes", "8", "--records", "300",
                     "--other-type", "z=40", "--seed", "5", "-o", str(gen)]) == 0
        cat = str(gen / "catalog.csv")
        std = tmp_path / "std"
        assert main(["standardize", "--schema", schema, "--catalog", cat, "--clusters", "12", "--grouped",
                     "-o", str(std)]) == 0
        ev = tmp_path / "ev"
        assert main(["evaluate", "--standard-set", str(std / "standard_set_geometry.json"),
                     "--standard-set", str(std / "standard_set_hole.json"), "--catalog", cat,
                     "--fuzzy-k", "5", "-o", str(ev)]) == 0
        sweeps = {}
        for jobs in (1, 4):
            out = tmp_path / f"sweep{jobs}"
            assert main(["sweep", "--schema", schema, "--catalog", cat, "--grid", "1:40:3", "--repeats", "6",
                         "--test-size", "60", "--fuzzy-k", "5", "--jobs", str(jobs), "--seed", "9",
                         "--target-count", "40", "-o", str(out)]) == 0
            sweeps[jobs] = out
        outputs = {
            gen: ["catalog.csv", "ground_truth.csv"],
            std: ["standard_set_geometry.json", "standard_set_hole.json",
                  "dendrogram_geometry.json", "dendrogram_hole.json"],
            ev: ["report.csv", "summary.json"],
            sweeps[1]: ["sweep.csv", "summary.json", "answers.json"],
            sweeps[4]: ["sweep.csv", "summary.json", "answers.json"],
        }
        compared = 0
        for d, files in outputs.items():
            again = tmp_path / f"replay_{d.name}"
            assert main(["replay", str(d / "manifest.json"), "-o", str(again)]) == 0
            for f in files:
                assert (d / f).read_bytes() == (again / f).read_bytes(), f"{d.name}/{f} differs on replay"
                compared += 1
            assert json.loads((again / "manifest.json").read_text())["config"]["out"] == str(again)
        for f in outputs[sweeps[1]]:
            assert (sweeps[1] / f).read_bytes() == (sweeps[4] / f).read_bytes(), f"{f} differs between --jobs 1 and 4"
            compared += 1
        info["detail"] = f"4 commands replayed, {compared} files byte-identical incl. --jobs 1 vs 4"
