"""Command-line front end: generate, standardize, evaluate, sweep, replay.

Every command writes its results plus a ``manifest.json`` into ``--out``.
``partstd replay MANIFEST -o DIR`` reruns the recorded command; result files
are byte-identical to the original run. Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .catalog import filter_by_type, load_catalog, load_schema, write_catalog
from .errors import ParseError, PartstdError, SchemaError
from .evaluate import write_report
from .pipeline import evaluate_sets, train
from .preprocess import transform
from .standardize import StandardSet
from .sweep import SweepConfig, min_clusters_for_count, min_clusters_for_error, run_sweep, write_sweep
from .synth import GeneratorConfig, generate, write_ground_truth

log = logging.getLogger("partstd")

MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {n}")
    return n


def _non_negative_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return x


def parse_grid(text: str) -> tuple[int, ...]:
    """``start:stop[:step]`` (stop inclusive) or comma-separated items of either form."""
    out: list[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise UsageError(f"bad grid item {item!r}") from None
        if len(nums) == 1:
            out.append(nums[0])
        elif len(nums) in (2, 3):
            start, stop = nums[0], nums[1]
            step = nums[2] if len(nums) == 3 else 1
            if step < 1:
                raise UsageError(f"grid step must be positive in {item!r}")
            out.extend(range(start, stop + 1, step))
        else:
            raise UsageError(f"bad grid item {item!r}")
    if not out:
        raise UsageError(f"cluster-count grid {text!r} is empty")
    if min(out) < 1:
        raise UsageError("cluster counts must be positive")
    return tuple(sorted(set(out)))


def load_weights(path: str) -> dict[str, float]:
    """``name,weight`` per line; ``#`` comments allowed."""
    weights = {}
    for lineno, line in enumerate(_existing(path, "metric weights file").read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, _, value = line.partition(",")
        try:
            w = float(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: weight {value.strip()!r} is not a number") from None
        if not w >= 0:
            raise UsageError(f"{path}:{lineno}: weights must be non-negative")
        weights[name.strip()] = w
    return weights


def _write_manifest(out: Path, command: str, config: dict, inputs: list[str], seed, started: str) -> None:
    doc = {
        "tool": "partstd",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "seed": seed,
        "started": started,
        "finished": _now(),
    }
    (out / MANIFEST).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_schema(path: str):
    try:
        return load_schema(_existing(path, "schema file"))
    except ParseError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- commands


def cmd_generate(cfg: dict) -> None:
    schema = _load_schema(cfg["schema"])
    try:
        gen = GeneratorConfig(
            schema=schema,
            n_prototypes=cfg["prototypes"],
            n_records=cfg["records"],
            size_skew=cfg["size_skew"],
            min_size=cfg["min_size"],
            noise_fraction=cfg["noise_fraction"],
            mutation_prob=cfg["mutation_prob"],
            singleton_fraction=cfg["singleton_fraction"],
            blank_prob=cfg["blank_prob"],
            other_types=dict(cfg["other_types"]),
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records, labels = generate(gen)
    out = _outdir(cfg["out"])
    write_catalog(out / "catalog.csv", records, schema)
    write_ground_truth(out / "ground_truth.csv", records, labels)
    print(f"wrote {len(records)} records to {out / 'catalog.csv'}")


def cmd_standardize(cfg: dict) -> None:
    schema = _load_schema(cfg["schema"])
    records = filter_by_type(load_catalog(_existing(cfg["catalog"], "catalog"), schema), schema)
    n = cfg["clusters"]
    if len(records) < 2:
        raise UsageError(f"catalog has {len(records)} records of type {schema.type_filter!r}; need 2")
    if n > len(records):
        raise UsageError(f"--clusters {n} exceeds the {len(records)} training records")
    weights = load_weights(cfg["metric_weights"]) if cfg["metric_weights"] else None
    try:
        model = train(records, schema, cfg["linkage"], weights, cfg["grouped"], cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(cfg["out"])
    sets = model.standard_sets(n)
    for name, S in sets.items():
        suffix = "" if name == "all" else f"_{name}"
        S.save(out / f"standard_set{suffix}.json")
        model.spaces[name].tree.save(out / f"dendrogram{suffix}.json")
    print(f"standardized {len(records)} records into {n} representatives ({', '.join(sets)})")


def cmd_evaluate(cfg: dict) -> None:
    paths = cfg["standard_set"]
    sets = [StandardSet.load(_existing(p, "standard set")) for p in paths]
    if len(sets) == 1:
        by_name = {"all": sets[0]}
    elif len(sets) == 2:
        by_name = {S.provenance.get("group"): S for S in sets}
        if set(by_name) != {"geometry", "hole"}:
            raise UsageError("grouped evaluation needs one geometry and one hole standard set")
        if sets[0].scaler != sets[1].scaler:
            raise UsageError("the two standard sets were built with different scalers")
    else:
        raise UsageError("pass one --standard-set, or two for grouped evaluation")
    k = cfg["fuzzy_k"]
    smallest = min(S.n_representatives for S in sets)
    if len(sets) == 1 and k > smallest:
        raise UsageError(f"--fuzzy-k {k} exceeds the {smallest} representatives")
    scaler = sets[0].scaler
    records = filter_by_type(load_catalog(_existing(cfg["catalog"], "catalog"), scaler.schema), scaler.schema)
    test = transform(records, scaler)
    report = evaluate_sets(test, by_name, k, cfg["tolerance_scale"])
    out = _outdir(cfg["out"])
    write_report(report, out / "report.csv", out / "summary.json")
    print(
        f"categorized {report.n_categorized}/{report.n_test}, "
        f"new {report.n_new}, mean error {report.mean_error:.6g}"
    )


def cmd_sweep(cfg: dict) -> None:
    schema = _load_schema(cfg["schema"])
    records = filter_by_type(load_catalog(_existing(cfg["catalog"], "catalog"), schema), schema)
    grid = parse_grid(cfg["grid"])
    n_train = len(records) - cfg["test_size"]
    if n_train < 2:
        raise UsageError(f"--test-size {cfg['test_size']} leaves {n_train} training records")
    if grid[-1] > n_train:
        raise UsageError(f"grid value {grid[-1]} exceeds the {n_train} training records")
    weights = load_weights(cfg["metric_weights"]) if cfg["metric_weights"] else None
    try:
        config = SweepConfig(
            grid=grid,
            repeats=cfg["repeats"],
            test_size=cfg["test_size"],
            seed=cfg["seed"],
            method=cfg["linkage"],
            metric=weights,
            fuzzy_k=cfg["fuzzy_k"],
            grouped=cfg["grouped"],
            tolerance_scale=cfg["tolerance_scale"],
            jobs=cfg["jobs"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_sweep(records, schema, config)
    out = _outdir(cfg["out"])
    write_sweep(result, out / "sweep.csv", out / "summary.json")
    answers = {}
    if cfg["error_budget"] is not None:
        answers["min_clusters_for_error"] = {
            "budget": cfg["error_budget"],
            "N": min_clusters_for_error(result, cfg["error_budget"]),
        }
    if cfg["target_count"] is not None:
        answers["min_clusters_for_count"] = {
            "target": cfg["target_count"],
            "N": min_clusters_for_count(result, cfg["target_count"]),
        }
    if answers:
        (out / "answers.json").write_text(json.dumps(answers, indent=1) + "\n", encoding="utf-8")
        for name, a in answers.items():
            print(f"{name}: {'none' if a['N'] is None else a['N']}")
    print(f"swept {len(grid)} cluster counts x {config.repeats} repeats -> {out / 'sweep.csv'}")


COMMANDS = {
    "generate": (cmd_generate, ["schema"]),
    "standardize": (cmd_standardize, ["schema", "catalog", "metric_weights"]),
    "evaluate": (cmd_evaluate, ["standard_set", "catalog"]),
    "sweep": (cmd_sweep, ["schema", "catalog", "metric_weights"]),
}


def _inputs(command: str, cfg: dict) -> list[str]:
    paths = []
    for key in COMMANDS[command][1]:
        val = cfg.get(key)
        if val is None:
            continue
        paths.extend(val if isinstance(val, list) else [val])
    return [p for p in paths if Path(p).is_file()]


def run_command(command: str, cfg: dict) -> None:
    started = _now()
    COMMANDS[command][0](cfg)
    _write_manifest(Path(cfg["out"]), command, cfg, _inputs(command, cfg), cfg.get("seed"), started)


def cmd_replay(manifest_path: str, out: str) -> None:
    doc = json.loads(_existing(manifest_path, "manifest").read_text())
    command = doc.get("command")
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown command {command!r}")
    for path, digest in doc.get("inputs", {}).items():
        if not Path(path).is_file():
            raise UsageError(f"manifest input missing: {path}")
        if _sha256(path) != digest:
            raise UsageError(f"manifest input changed since the recorded run: {path}")
    cfg = dict(doc["config"])
    cfg["out"] = out
    run_command(command, cfg)


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("-o", "--out", required=True, help="output directory")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _cluster_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--linkage", choices=["ward", "single", "complete", "average"], default="ward")
    p.add_argument("--metric-weights", default=None, help="file of name,weight lines")
    p.add_argument("--grouped", action="store_true", help="cluster geometry and hole columns separately")


def _other_type(text: str) -> tuple[str, int]:
    name, sep, count = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=COUNT, got {text!r}")
    try:
        return name, int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=COUNT, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partstd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"partstd {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic catalog with planted prototypes")
    g.add_argument("--schema", required=True)
    g.add_argument("--prototypes", type=_positive_int, default=25)
    g.add_argument("--records", type=_positive_int, default=1963, help="records of the schema's type")
    g.add_argument("--singleton-fraction", type=_non_negative_float, default=0.05)
    g.add_argument("--noise-fraction", type=_non_negative_float, default=0.4,
                   help="noise bound as a fraction of each tolerance")
    g.add_argument("--mutation-prob", type=_non_negative_float, default=0.0)
    g.add_argument("--blank-prob", type=_non_negative_float, default=0.0)
    g.add_argument("--size-skew", type=_non_negative_float, default=1.0)
    g.add_argument("--min-size", type=_positive_int, default=2)
    g.add_argument("--other-type", dest="other_types", type=_other_type, action="append", default=[],
                   metavar="NAME=COUNT", help="add COUNT filler records of another type")
    _common(g)

    s = sub.add_parser("standardize", help="cluster a catalog and write its standard set")
    _cluster_opts(s)
    s.add_argument("--clusters", type=_positive_int, required=True)
    _common(s)

    e = sub.add_parser("evaluate", help="match a test catalog against standard set(s)")
    e.add_argument("--standard-set", action="append", required=True,
                   help="standard set JSON; give two (geometry, hole) for grouped evaluation")
    e.add_argument("--catalog", required=True)
    e.add_argument("--fuzzy-k", type=_positive_int, default=1)
    e.add_argument("--tolerance-scale", type=_non_negative_float, default=1.0)
    _common(e, seed=False)

    w = sub.add_parser("sweep", help="cross-validated sweep over cluster counts")
    _cluster_opts(w)
    w.add_argument("--grid", required=True, help="e.g. 1:1500:25 or 10,20,50")
    w.add_argument("--repeats", type=_positive_int, default=50)
    w.add_argument("--test-size", type=_positive_int, default=400)
    w.add_argument("--fuzzy-k", type=_positive_int, default=1)
    w.add_argument("--tolerance-scale", type=_non_negative_float, default=1.0)
    w.add_argument("--jobs", type=_positive_int, default=1)
    w.add_argument("--error-budget", type=float, default=None)
    w.add_argument("--target-count", type=float, default=None)
    _common(w)

    r = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("-o", "--out", required=True)
    return parser


_NOT_RECORDED = {"command", "verbose"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "replay":
            cmd_replay(args.manifest, args.out)
        else:
            cfg = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
            if "other_types" in cfg:
                cfg["other_types"] = [list(t) for t in cfg["other_types"]]
            run_command(args.command, cfg)
    except (UsageError, SchemaError) as exc:
        print(f"partstd: error: {exc}", file=sys.stderr)
        return 2
    except (PartstdError, ValueError, OSError) as exc:
        print(f"partstd: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
