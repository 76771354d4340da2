import csv
import filecmp
import shutil

import numpy as np
import pytest

from nasinit import io
from nasinit.cli import DEFAULTS, main
from nasinit.search import RunTrace

SMALL_SEARCH = ["--runs", "2", "--evaluations", "12", "--population", "5", "--tournament", "2"]


def run(*args):
    return main([str(a) for a in args])


def manifest_without_time(path):
    data = io.read_json(path)
    data.pop("created_at")
    return data


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def sampled(tmp_path_factory):
    out = tmp_path_factory.mktemp("sample")
    assert run("sample", "--n-samples", 120, "--synthetic-seed", 2, "--seed", 4, "--out", out) == 0
    return out


def test_sample_outputs(sampled):
    lines = (sampled / "samples.jsonl").read_text().splitlines()
    assert len(lines) == 120
    orig = rows(sampled / "features_original.csv")
    binary = rows(sampled / "features_binary.csv")
    assert len(orig) == len(binary) == 121
    assert orig[0][:2] == ["a0", "a1"] and orig[0][-1] == "acc108"
    assert len(orig[1]) == 58 and len(binary[1]) == 298
    manifest = io.read_json(sampled / "sample_manifest.json")
    assert manifest["provenance"]["provenance"] == "synthetic"
    assert manifest["config"]["n_samples"] == 120


def test_sample_is_byte_identical(sampled, tmp_path):
    assert run("sample", "--n-samples", 120, "--synthetic-seed", 2, "--seed", 4,
               "--out", tmp_path) == 0
    for name in ("samples.jsonl", "features_original.csv", "features_binary.csv"):
        assert filecmp.cmp(sampled / name, tmp_path / name, shallow=False)
    assert manifest_without_time(sampled / "sample_manifest.json") == \
        manifest_without_time(tmp_path / "sample_manifest.json")


def test_sample_without_header(tmp_path):
    assert run("sample", "--n-samples", 5, "--no-header", "--out", tmp_path) == 0
    X = io.read_matrix(tmp_path / "features_original.csv", header=False)
    assert X.shape == (5, 58)


def test_sample_more_than_dataset(sampled, tmp_path, capsys):
    code = run("sample", "--dataset", sampled / "samples.jsonl", "--n-samples", 500,
               "--out", tmp_path)
    assert code == 2
    err = capsys.readouterr().err
    assert "500" in err and "120" in err


def test_bad_dataset_line_is_data_error(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"adjacency": [[0, 1], [0, 0]], "ops": []}\n')
    assert run("sample", "--dataset", path, "--n-samples", 1, "--out", tmp_path) == 2
    assert "line 1" in capsys.readouterr().err


def test_usage_errors_exit_one(tmp_path):
    assert run("search", "--budget", 7) == 1
    assert run("bogus") == 1
    assert run() == 1
    assert run("calibrate", "--out", tmp_path, "--k-grid", "") == 1
    assert run("calibrate", "--out", tmp_path, "--component-grid", "two") == 1


def test_calibrate_default_grids():
    assert {10, 20, 27} <= {int(k) for k in DEFAULTS["k_grid"].split(",")}
    assert 2 in {int(c) for c in DEFAULTS["component_grid"].split(",")}


def test_calibrate_outputs_and_rerun(sampled, tmp_path):
    out = tmp_path / "cal"
    shutil.copytree(sampled, out)
    args = ["calibrate", "--out", out, "--component-grid", "2,3", "--k-grid", "3,5",
            "--sweep-k", 4, "--cluster", "kmeans", "--k", 3]
    assert run(*args) == 0
    names = ["sweep_components_original.csv", "sweep_components_binary.csv"] + [
        f"sweep_clusters_{e}_{r}.csv" for e in ("original", "binary") for r in ("pca", "tsvd")]
    first = {n: (out / n).read_bytes() for n in names}
    header = rows(out / names[0])[0]
    assert header == ["method", "encoding", "n_components", "n_clusters",
                      "silhouette", "calinski_harabasz", "davies_bouldin"]
    assert len(rows(out / names[0])) == 1 + 4
    assert rows(out / "scatter_original_tsvd.csv")[0] == ["c0", "c1", "label"]
    assert rows(out / "reduced_binary_pca.csv")[0] == ["c0", "c1"]
    assert run(*args) == 0
    assert {n: (out / n).read_bytes() for n in names} == first


def test_calibrate_needs_features(tmp_path):
    assert run("calibrate", "--out", tmp_path) == 2


@pytest.fixture(scope="module")
def searched(tmp_path_factory):
    out = tmp_path_factory.mktemp("search")
    for strategy in ("rs", "ae"):
        assert run("search", "--strategy", strategy, *SMALL_SEARCH, "--out", out) == 0
    return out


def test_search_smoke(searched):
    runs = io.read_traces(searched / "rs" / "traces.csv")
    assert len(runs) == 2 and all(len(r) == 12 for r in runs)
    manifest = io.read_json(searched / "ae" / "manifest.json")
    assert manifest["strategy"] == "ae" and len(manifest["run_seeds"]) == 2
    assert rows(searched / "ae" / "summary.csv")[0] == [
        "budget", "strategy", "mean", "median", "min", "max", "std"]


def test_search_manifest_is_reproducible_and_replayable(searched, tmp_path):
    assert run("search", "--strategy", "ae", *SMALL_SEARCH, "--out", tmp_path) == 0
    assert manifest_without_time(searched / "ae" / "manifest.json") == \
        manifest_without_time(tmp_path / "ae" / "manifest.json")
    replay = tmp_path / "replay"
    assert run("search", "--config", searched / "ae" / "manifest.json", "--out", replay) == 0
    assert filecmp.cmp(searched / "ae" / "traces.csv", replay / "ae" / "traces.csv",
                       shallow=False)


def test_bae_records_initial_population(tmp_path):
    assert run("search", "--strategy", "bae", "--k", 27, "--n-samples", 300, "--runs", 2,
               "--evaluations", 30, "--out", tmp_path) == 0
    init = io.read_json(tmp_path / "bae" / "manifest.json")["initial_population"]
    assert len(init["architectures"]) == 27 and len(set(init["keys"])) == 27


def test_bae_rejects_k_population_mismatch(tmp_path):
    assert run("search", "--strategy", "bae", "--k", 10, "--out", tmp_path) == 1


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nruns = 3\nevaluations=12\npopulation = 5\n"
                   "tournament = 2\nstrategy = rs\n")
    assert run("search", "--config", cfg, "--runs", 2, "--out", tmp_path) == 0
    manifest = io.read_json(tmp_path / "rs" / "manifest.json")
    assert manifest["config"]["runs"] == 2
    assert manifest["config"]["evaluations"] == 12
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run("search", "--config", bad) == 1


def test_report_outputs(tmp_path):
    src = tmp_path / "runs"
    for budget in (36, 108):
        for strategy in ("rs", "ae"):
            out = src / str(budget)
            assert run("search", "--strategy", strategy, "--budget", budget, *SMALL_SEARCH,
                       "--runs", 3, "--out", out) == 0
    dirs = [src / b / s for b in ("36", "108") for s in ("rs", "ae")]
    rep = tmp_path / "report"
    assert run("report", *dirs, "--out", rep) == 0
    summary = rows(rep / "summary.csv")
    assert len(summary) - 1 == 2 * 2
    curves = rows(rep / "curves.csv")[1:]
    for strategy in ("rs", "ae"):
        assert sum(1 for r in curves if r[0] == strategy and r[1] == "108") == 12
    comparisons = rows(rep / "comparisons.csv")
    assert comparisons[0] == ["pair", "budget", "p_value", "significant_at_0.05"]
    assert {(r[0], r[1]) for r in comparisons[1:]} == {("rs-ae", "36"), ("rs-ae", "108")}


def test_report_identical_sets_give_p_one(searched, tmp_path):
    twin = tmp_path / "twin"
    shutil.copytree(searched / "rs", twin)
    manifest = io.read_json(twin / "manifest.json")
    manifest["strategy"] = "ae"
    io.write_json(manifest, twin / "manifest.json")
    assert run("report", searched / "rs", twin, "--out", tmp_path / "rep") == 0
    p = float(rows(tmp_path / "rep" / "comparisons.csv")[1][2])
    assert p == pytest.approx(1.0, abs=0.02)


def test_report_refuses_mismatched_evaluations(searched, tmp_path, caplog):
    other = tmp_path / "other"
    assert run("search", "--strategy", "ae", *SMALL_SEARCH, "--evaluations", 15,
               "--out", other) == 0
    assert run("report", searched / "rs", other / "ae", "--out", tmp_path / "rep") == 2
    assert "C=12" in caplog.text and "C=15" in caplog.text


def test_report_missing_directory(tmp_path):
    assert run("report", tmp_path / "nothing", "--out", tmp_path) == 2


def test_trace_io_roundtrip(tmp_path):
    trace = RunTrace("ae", 0, incumbent_test=[0.1, 0.2, 0.3],
                     incumbent_validation=[0.11, 0.21, 0.3000000000000001])
    io.write_traces([trace, trace], tmp_path / "t.csv")
    runs = io.read_traces(tmp_path / "t.csv")
    assert runs == [list(zip(trace.incumbent_test, trace.incumbent_validation))] * 2


def test_matrix_io_roundtrip(tmp_path):
    X = np.random.default_rng(0).random((4, 3))
    io.write_matrix(X, tmp_path / "m.csv", ["x", "y", "z"])
    assert np.array_equal(io.read_matrix(tmp_path / "m.csv"), X)
    io.write_reduced(X[:, :2], tmp_path / "r.csv")
    assert rows(tmp_path / "r.csv")[0] == ["c0", "c1"]
