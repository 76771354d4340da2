"""Command-line pipeline: ``sample``, ``calibrate``, ``search`` and ``report``.

Settings resolve as command-line flag, then ``--config`` file, then default.
A config file holds ``key = value`` lines (``#`` starts a comment); a JSON
manifest written by this tool is accepted too, which replays its run.

Exit status: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import datetime
import itertools
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .benchmark import TabularBenchmark, load_dataset, sample_records, synthetic_benchmark, write_dataset
from .clustering import ClusterParams, fit_clusters, sweep_cluster_counts, sweep_components
from .encoding import ArchitectureEncoder, BUDGETS
from .exceptions import (
    DatasetError,
    MissingArchitectureError,
    NasInitError,
    ParameterError,
    SearchAbortedError,
)
from .reduction import make_reducer
from .search import (
    STRATEGIES,
    ClusteringRecipe,
    SearchConfig,
    build_initial_population,
    derive_seed,
    run_experiment,
)
from .stats import summarize, wilcoxon_rank_sum

LOG = logging.getLogger("nasinit")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

ENCODINGS = ("original", "binary")
REDUCERS = ("pca", "tsvd")
CLUSTERS = ("kmeans", "dbscan", "bgm")

DEFAULTS = {
    "dataset": None,
    "synthetic_seed": 0,
    "n_samples": 10000,
    "encoding": "original",
    "reducer": "tsvd",
    "components": 2,
    "cluster": "bgm",
    "k": 27,
    "strategy": "bae",
    "population": 27,
    "tournament": 10,
    "evaluations": 2000,
    "budget": 108,
    "runs": 100,
    "seed": 0,
    "out": "out",
    "jobs": 1,
    "component_grid": "2,3,4,5,6,7,8,9,10",
    "k_grid": "10,20,27",
    "sweep_k": 10,
    "sweep_cluster": "kmeans",
    "no_header": False,
}

INT_KEYS = {"synthetic_seed", "n_samples", "components", "k", "population", "tournament",
            "evaluations", "budget", "runs", "seed", "jobs", "sweep_k"}
CHOICES = {"encoding": ENCODINGS, "reducer": REDUCERS, "cluster": CLUSTERS,
           "strategy": STRATEGIES, "budget": BUDGETS, "sweep_cluster": CLUSTERS}

# Settings that do not change any output file; kept out of manifests.
VOLATILE_KEYS = {"jobs", "out", "config"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str, name: str) -> list:
    try:
        values = [int(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise UsageError(f"--{name.replace('_', '-')} must be a comma-separated list of integers")
    if not values:
        raise UsageError(f"--{name.replace('_', '-')} is empty")
    return values


def read_config(path) -> dict:
    """Parse a ``key = value`` file or the ``config`` block of a JSON manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: malformed JSON ({exc.msg})")
        raw = data.get("config", data) if isinstance(data, dict) else None
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: expected a JSON object")
        items = [(k, v, None) for k, v in raw.items()]
    else:
        items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            items.append((key, value, lineno))

    config = {}
    for key, value, lineno in items:
        key = key.replace("-", "_")
        where = f"{path}:{lineno}" if lineno else str(path)
        if key not in DEFAULTS:
            raise UsageError(f"{where}: unknown key {key!r}")
        config[key] = _coerce(key, value, where)
    return config


def _coerce(key, value, where):
    if value is None:
        return None
    if key in INT_KEYS:
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise UsageError(f"{where}: {key} must be an integer, got {value!r}")
    elif key == "no_header":
        value = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    elif key in ("component_grid", "k_grid") and isinstance(value, list):
        value = ",".join(str(v) for v in value)
    else:
        value = str(value)
    if key in CHOICES and value not in CHOICES[key]:
        raise UsageError(f"{where}: {key} must be one of {list(CHOICES[key])}, got {value!r}")
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    return settings


def _common(parser):
    parser.add_argument("--config", help="key=value file or a manifest JSON to replay")
    parser.add_argument("--dataset", help="JSON-lines benchmark file (closed world)")
    parser.add_argument("--synthetic-seed", type=int, help="seed of the synthetic benchmark")
    parser.add_argument("--n-samples", type=int, help="number of sampled architectures")
    parser.add_argument("--encoding", choices=ENCODINGS)
    parser.add_argument("--reducer", choices=REDUCERS)
    parser.add_argument("--components", type=int, help="reduced dimensionality")
    parser.add_argument("--cluster", choices=CLUSTERS)
    parser.add_argument("--k", type=int, help="cluster count")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nasinit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample", help="sample architectures and write feature matrices")
    _common(p)
    p.add_argument("--no-header", action="store_true", help="write feature CSVs without header")

    p = sub.add_parser("calibrate", help="component and cluster-count sweeps")
    _common(p)
    p.add_argument("--component-grid", help="comma-separated component counts")
    p.add_argument("--k-grid", help="comma-separated cluster counts")
    p.add_argument("--sweep-k", type=int, help="cluster count held fixed in the component sweep")
    p.add_argument("--sweep-cluster", choices=CLUSTERS, help="clustering used by both sweeps")

    p = sub.add_parser("search", help="run M seeded searches of one strategy")
    _common(p)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--population", type=int)
    p.add_argument("--tournament", type=int)
    p.add_argument("--evaluations", type=int)
    p.add_argument("--budget", type=int, choices=BUDGETS)
    p.add_argument("--runs", type=int)

    p = sub.add_parser("report", help="summaries, rank-sum comparisons and curves")
    p.add_argument("trace_dirs", nargs="+", help="directories written by 'search'")
    p.add_argument("--out", help="output directory")
    return parser


# ---------------------------------------------------------------- helpers

def open_benchmark(s: dict) -> TabularBenchmark:
    if s["dataset"]:
        try:
            return load_dataset(s["dataset"])
        except OSError as exc:
            raise DatasetError(f"{s['dataset']}: {exc.strerror}") from None
        except DatasetError as exc:
            raise DatasetError(f"{s['dataset']}: {exc}") from None
    return synthetic_benchmark(s["synthetic_seed"])


def cluster_params(s: dict, n_clusters=None) -> ClusterParams:
    return ClusterParams(method=s["cluster"], n_clusters=n_clusters or s["k"], seed=s["seed"])


def recipe_from(s: dict) -> ClusteringRecipe:
    return ClusteringRecipe(encoding=s["encoding"], reducer=s["reducer"],
                            n_components=s["components"], params=cluster_params(s),
                            n_samples=s["n_samples"])


def _manifest(command: str, s: dict, b: TabularBenchmark, **extra) -> dict:
    config = {k: v for k, v in s.items() if k not in VOLATILE_KEYS}
    data = {"command": command, "version": __version__, "config": config,
            "provenance": b.describe() if b is not None else None,
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    data.update(extra)
    return data


def _outdir(s: dict) -> Path:
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_sample(s: dict) -> int:
    b = open_benchmark(s)
    n = s["n_samples"]
    if n < 1:
        raise UsageError("--n-samples must be >= 1")
    if b.closed_world and n > len(b):
        raise DatasetError(f"requested {n} samples but {s['dataset']} holds only {len(b)} "
                           "architectures")
    records = sample_records(b, n, np.random.default_rng(s["seed"]))
    out = _outdir(s)
    write_dataset(records, out / "samples.jsonl")
    for kind in ENCODINGS:
        X = ArchitectureEncoder(kind).fit_transform(records)
        io.write_features(X, out / f"features_{kind}.csv", kind, header=not s["no_header"])
    io.write_json(_manifest("sample", s, b, n_records=len(records)), out / "sample_manifest.json")
    print(f"wrote {len(records)} samples to {out}")
    return EXIT_OK


def cmd_calibrate(s: dict) -> int:
    component_grid = _int_list(s["component_grid"], "component_grid")
    k_grid = _int_list(s["k_grid"], "k_grid")
    out = _outdir(s)
    params = cluster_params(s)
    sweep_params = replace(params, method=s["sweep_cluster"])
    cells = failed = 0
    for kind in ENCODINGS:
        path = out / f"features_{kind}.csv"
        if not path.exists():
            raise DatasetError(f"{path} not found; run 'nasinit sample' with the same --out first")
        X = io.read_matrix(path, header=not s["no_header"])

        rows = sweep_components(X, REDUCERS, component_grid, k_fixed=s["sweep_k"],
                                encoding=kind, params=sweep_params)
        io.write_sweep(rows, out / f"sweep_components_{kind}.csv")
        cells += len(rows)
        failed += sum(not r.ok for r in rows)

        for reducer in REDUCERS:
            try:
                Z = make_reducer(reducer, s["components"]).fit_transform(X)
            except NasInitError as exc:
                LOG.warning("%s/%s reduction failed: %s", kind, reducer, exc)
                cells += len(k_grid)
                failed += len(k_grid)
                continue
            rows = sweep_cluster_counts(Z, k_grid, encoding=kind, method=reducer,
                                        params=sweep_params)
            io.write_sweep(rows, out / f"sweep_clusters_{kind}_{reducer}.csv")
            cells += len(rows)
            failed += sum(not r.ok for r in rows)
            io.write_reduced(Z, out / f"reduced_{kind}_{reducer}.csv")
            if Z.shape[1] >= 2:
                try:
                    labels = fit_clusters(Z, params).labels
                except (NasInitError, ValueError) as exc:
                    LOG.warning("%s/%s scatter clustering failed: %s", kind, reducer, exc)
                else:
                    io.write_scatter(Z, labels, out / f"scatter_{kind}_{reducer}.csv")

    io.write_json(_manifest("calibrate", s, None, cells=cells, failed_cells=failed),
                  out / "calibrate_manifest.json")
    print(f"calibration: {cells - failed}/{cells} cells computed, written to {out}")
    if cells == failed:
        LOG.error("every sweep cell failed")
        return EXIT_RUNTIME
    return EXIT_OK


def search_config(s: dict) -> SearchConfig:
    return SearchConfig(population_size=s["population"], tournament_size=s["tournament"],
                        total_evaluations=s["evaluations"], budget=s["budget"], seed=s["seed"])


def cmd_search(s: dict) -> int:
    cfg = search_config(s)
    if s["runs"] < 1:
        raise UsageError("--runs must be >= 1")
    b = open_benchmark(s)
    strategy = s["strategy"]
    init, init_info, recipe = None, None, None
    if strategy == "bae":
        recipe = recipe_from(s)
        if recipe.params.n_clusters != cfg.population_size and recipe.params.method != "dbscan":
            raise UsageError(f"bae needs --k ({recipe.params.n_clusters}) equal to "
                             f"--population ({cfg.population_size})")
        init, details = build_initial_population(b, recipe, seed=cfg.seed)
        if len(init) != cfg.population_size:
            raise SearchAbortedError(
                f"clustering produced {len(init)} centroids, population size is "
                f"{cfg.population_size}")
        init_info = {"sample_indices": details["indices"],
                     "keys": [a.key for a in init],
                     "architectures": [a.to_dict() for a in init]}

    seeds = [derive_seed(cfg.seed, i) for i in range(s["runs"])]
    out = _outdir(s) / strategy
    out.mkdir(parents=True, exist_ok=True)
    try:
        traces = run_experiment(b, cfg, strategy, M=s["runs"], init=init, n_jobs=s["jobs"])
    except SearchAbortedError as exc:
        failures = getattr(exc, "failures", [])
        for i, seed, err in failures:
            LOG.error("run %d aborted (replay with seed %d): %s", i, seed, err)
        io.write_json(_manifest("search", s, b, strategy=strategy, run_seeds=seeds,
                                failed_runs=[{"run": i, "seed": sd, "error": str(e)}
                                             for i, sd, e in failures]),
                      out / "manifest.json")
        raise

    io.write_traces(traces, out / "traces.csv")
    finals = [t.final_test_accuracy for t in traces]
    if len(finals) >= 2:
        io.write_summary([(cfg.budget, strategy, summarize(finals))], out / "summary.csv")
    manifest = _manifest("search", s, b, strategy=strategy, run_seeds=seeds,
                         recipe=recipe.describe() if recipe else None,
                         initial_population=init_info)
    io.write_json(manifest, out / "manifest.json")
    print(f"{strategy}: {len(traces)} runs of {cfg.total_evaluations} evaluations, "
          f"mean final test accuracy {np.mean(finals):.6f}; written to {out}")
    return EXIT_OK


def _load_trace_dir(path: Path):
    manifest_path = path / "manifest.json"
    traces_path = path / "traces.csv"
    if not manifest_path.exists() or not traces_path.exists():
        raise DatasetError(f"{path}: expected manifest.json and traces.csv from 'nasinit search'")
    try:
        manifest = io.read_json(manifest_path)
        config = manifest["config"]
        strategy = manifest["strategy"]
        budget, C = int(config["budget"]), int(config["evaluations"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{manifest_path}: unreadable manifest ({exc})") from None
    runs = io.read_traces(traces_path)
    if any(len(r) != C for r in runs):
        raise DatasetError(f"{traces_path}: traces do not all have {C} iterations")
    return strategy, budget, C, runs


def cmd_report(args) -> int:
    groups = {}
    for d in args.trace_dirs:
        strategy, budget, C, runs = _load_trace_dir(Path(d))
        key = (budget, strategy)
        if key in groups:
            raise DatasetError(f"{d}: duplicate traces for strategy {strategy} at budget {budget}")
        groups[key] = (C, runs, d)

    out = Path(args.out or DEFAULTS["out"])
    out.mkdir(parents=True, exist_ok=True)
    keys = sorted(groups)
    summary, curves = [], []
    for budget, strategy in keys:
        _, runs, _ = groups[(budget, strategy)]
        finals = [r[-1][0] for r in runs]
        if len(finals) < 2:
            raise DatasetError(f"{strategy} at budget {budget}: need >= 2 runs to summarize")
        summary.append((budget, strategy, summarize(finals)))
        mean_curve = np.mean([[t for t, _ in r] for r in runs], axis=0)
        curves.extend((strategy, budget, i, float(v)) for i, v in enumerate(mean_curve))
    io.write_summary(summary, out / "summary.csv")
    io.write_curves(curves, out / "curves.csv")

    comparisons, refused = [], []
    for budget in sorted({b for b, _ in keys}):
        present = [s for s in STRATEGIES if (budget, s) in groups]
        for s1, s2 in itertools.combinations(present, 2):
            (c1, r1, d1), (c2, r2, d2) = groups[(budget, s1)], groups[(budget, s2)]
            if c1 != c2:
                refused.append(f"{s1} vs {s2} at budget {budget}: evaluation counts differ "
                               f"({d1}: C={c1}, {d2}: C={c2})")
                continue
            p = wilcoxon_rank_sum([r[-1][0] for r in r1], [r[-1][0] for r in r2]).p_value
            comparisons.append((f"{s1}-{s2}", budget, p))
    io.write_comparisons(comparisons, out / "comparisons.csv")
    print(f"report: {len(summary)} summary rows, {len(comparisons)} comparisons; written to {out}")
    if refused:
        for msg in refused:
            LOG.error("comparison refused: %s", msg)
        return EXIT_DATA
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "calibrate": cmd_calibrate, "search": cmd_search}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "report":
            return cmd_report(args)
        return COMMANDS[args.command](resolve(args))
    except UsageError as exc:
        print(f"nasinit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, MissingArchitectureError) as exc:
        print(f"nasinit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"nasinit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NasInitError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"nasinit: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"nasinit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
