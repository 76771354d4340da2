"""CSV and JSON writers/readers for pipeline artifacts.

Floats are written with ``repr`` so files round-trip exactly and reruns are
byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from .clustering import SWEEP_COLUMNS
from .encoding import feature_names
from .exceptions import DatasetError

__all__ = [
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
    "COMPARISON_COLUMNS",
    "CURVE_COLUMNS",
    "write_matrix",
    "read_matrix",
    "write_features",
    "write_reduced",
    "write_sweep",
    "write_scatter",
    "write_traces",
    "read_traces",
    "write_summary",
    "write_comparisons",
    "write_curves",
    "write_json",
    "read_json",
]

TRACE_COLUMNS = ("run_id", "iteration", "incumbent_test_accuracy",
                 "incumbent_validation_accuracy")
SUMMARY_COLUMNS = ("budget", "strategy", "mean", "median", "min", "max", "std")
COMPARISON_COLUMNS = ("pair", "budget", "p_value", "significant_at_0.05")
CURVE_COLUMNS = ("strategy", "budget", "iteration", "mean_incumbent_test_accuracy")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return "" if value is None else str(value)


def _write_rows(path, header: Optional[Sequence[str]], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_matrix(X, path, columns: Optional[Sequence[str]] = None) -> None:
    """Numeric matrix, one row per sample; ``columns=None`` omits the header."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if columns is not None and len(columns) != X.shape[1]:
        raise ValueError(f"{len(columns)} column names for {X.shape[1]} columns")
    _write_rows(path, columns, X.tolist())


def read_matrix(path, header: bool = True) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if header:
        rows = rows[1:]
    try:
        X = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"{os.fspath(path)}: non-numeric entry ({exc})") from None
    if X.ndim != 2 or X.size == 0:
        raise DatasetError(f"{os.fspath(path)}: empty or ragged matrix")
    return X


def write_features(X, path, kind: str, header: bool = True) -> None:
    write_matrix(X, path, feature_names(kind) if header else None)


def write_reduced(Z, path) -> None:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    write_matrix(Z, path, [f"c{i}" for i in range(Z.shape[1])])


def write_sweep(rows, path) -> None:
    _write_rows(path, SWEEP_COLUMNS,
                ([getattr(r, c) for c in SWEEP_COLUMNS] for r in rows))


def write_scatter(Z, labels, path) -> None:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] < 2:
        raise ValueError("scatter export needs at least two reduced columns")
    _write_rows(path, ("c0", "c1", "label"),
                ((float(a), float(b), int(l)) for (a, b), l in zip(Z[:, :2], labels)))


def write_traces(traces, path) -> None:
    def rows():
        for run_id, trace in enumerate(traces):
            for it, (t, v) in enumerate(zip(trace.incumbent_test, trace.incumbent_validation)):
                yield run_id, it, t, v
    _write_rows(path, TRACE_COLUMNS, rows())


def read_traces(path) -> list:
    """Per-run lists of ``(test, validation)`` incumbent pairs, by run id."""
    runs = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise DatasetError(f"{os.fspath(path)}: expected columns {','.join(TRACE_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                run, it = int(row["run_id"]), int(row["iteration"])
                pair = (float(row["incumbent_test_accuracy"]),
                        float(row["incumbent_validation_accuracy"]))
            except (TypeError, ValueError):
                raise DatasetError(f"{os.fspath(path)}: malformed row", lineno) from None
            seq = runs.setdefault(run, [])
            if it != len(seq):
                raise DatasetError(f"{os.fspath(path)}: run {run} iteration {it} out of order",
                                   lineno)
            seq.append(pair)
    return [runs[k] for k in sorted(runs)]


def write_summary(rows, path) -> None:
    """``rows``: (budget, strategy, SampleSummary)."""
    _write_rows(path, SUMMARY_COLUMNS,
                ((b, s, x.mean, x.median, x.min, x.max, x.std) for b, s, x in rows))


def write_comparisons(rows, path) -> None:
    """``rows``: (pair label, budget, p value)."""
    _write_rows(path, COMPARISON_COLUMNS, ((pair, b, p, p < 0.05) for pair, b, p in rows))


def write_curves(rows, path) -> None:
    _write_rows(path, CURVE_COLUMNS, rows)


def write_json(data, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
