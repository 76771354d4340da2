"""Tabular fitness: ingested architecture records or a synthetic surrogate.

Dataset files are UTF-8 JSON lines, one record per line::

    {"adjacency": [[0, 1], [0, 0]], "ops": [],
     "metrics": {"4": {"val": 0.71, "test": 0.70}, "12": {...}, "36": {...}, "108": {...}}}
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .encoding import BUDGETS
from .exceptions import (
    DatasetError,
    InvalidArchitectureError,
    MissingArchitectureError,
    NasInitError,
    ParameterError,
)
from .search_space import (
    DEFAULT_CONSTRAINTS,
    CellArchitecture,
    OperationLabel,
    SpaceConstraints,
    is_valid,
    prune,
    random_architecture,
)

__all__ = [
    "BenchmarkRecord",
    "EvalResult",
    "TabularBenchmark",
    "SyntheticSurrogate",
    "load_dataset",
    "write_dataset",
    "sample_records",
    "query",
    "synthetic_benchmark",
    "longest_path",
]

LOG = logging.getLogger(__name__)

INGESTED = "ingested"
SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class BenchmarkRecord:
    """One cell with (validation, test) accuracy at each epoch budget."""

    arch: CellArchitecture
    metrics: dict  # budget -> (val, test)
    training_time: Optional[float] = None

    def test_accuracies(self) -> tuple:
        return tuple(self.metrics[b][1] for b in BUDGETS)

    def to_dict(self) -> dict:
        data = self.arch.to_dict()
        data["metrics"] = {str(b): {"val": v, "test": t} for b, (v, t) in self.metrics.items()}
        if self.training_time is not None:
            data["training_time"] = self.training_time
        return data


@dataclass(frozen=True)
class EvalResult:
    validation_accuracy: float
    test_accuracy: float
    budget: int
    lookup_key: str


def longest_path(arch: CellArchitecture) -> int:
    """Edge count of the longest input-to-output path of the pruned cell."""
    cell = prune(arch)
    n = cell.n_nodes
    depth = [-1] * n
    depth[0] = 0
    for j in range(1, n):
        best = max((depth[i] for i in range(j) if cell.adjacency[i][j] and depth[i] >= 0),
                   default=-1)
        depth[j] = best + 1 if best >= 0 else -1
    return depth[-1]


def _unit_hash(*parts) -> float:
    digest = hashlib.sha256(":".join(map(str, parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


class SyntheticSurrogate:
    """Deterministic additive accuracy model over cell structure.

    ``test = clip(scale[budget] * (base + sum_op w_op * count_op + w_depth *
    longest_path + w_edges * edges + noise), 0, 1)`` where ``noise`` is
    uniform in +-0.01, derived from hashing (key, seed). Validation adds a
    +-0.002 offset hashed from the key alone.
    """

    BASE = 0.80
    OP_WEIGHTS = {
        OperationLabel.CONV3X3: 0.010,
        OperationLabel.CONV1X1: 0.004,
        OperationLabel.MAXPOOL3X3: -0.006,
    }
    DEPTH_WEIGHT = 0.008
    EDGE_WEIGHT = 0.002
    BUDGET_SCALE = {4: 0.92, 12: 0.96, 36: 0.99, 108: 1.00}
    NOISE = 0.01
    VAL_OFFSET = 0.002

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._cache = {}

    def _scores(self, arch: CellArchitecture) -> tuple:
        """(unscaled accuracy, validation offset), memoized by key."""
        key = arch.key
        cached = self._cache.get(key)
        if cached is None:
            cell = prune(arch)
            raw = (self.BASE
                   + sum(self.OP_WEIGHTS[o] for o in cell.ops)
                   + self.DEPTH_WEIGHT * longest_path(cell)
                   + self.EDGE_WEIGHT * cell.n_edges
                   + self.NOISE * (2.0 * _unit_hash(key, self.seed) - 1.0))
            offset = self.VAL_OFFSET * (2.0 * _unit_hash(key, "val") - 1.0)
            cached = self._cache[key] = (raw, offset)
        return cached

    def evaluate(self, arch: CellArchitecture, budget: int) -> EvalResult:
        raw, offset = self._scores(arch)
        test = min(max(self.BUDGET_SCALE[budget] * raw, 0.0), 1.0)
        return EvalResult(min(max(test + offset, 0.0), 1.0), test, budget, arch.key)

    def record(self, arch: CellArchitecture) -> BenchmarkRecord:
        metrics = {}
        for b in BUDGETS:
            r = self.evaluate(arch, b)
            metrics[b] = (r.validation_accuracy, r.test_accuracy)
        return BenchmarkRecord(prune(arch), metrics)


@dataclass
class TabularBenchmark:
    """Canonical key -> record store.

    Ingested benchmarks are closed world: unknown cells raise
    MissingArchitectureError. Synthetic ones answer any cell on demand.
    """

    records: dict = field(default_factory=dict)
    provenance: str = INGESTED
    closed_world: bool = True
    surrogate: Optional[SyntheticSurrogate] = None
    constraints: SpaceConstraints = DEFAULT_CONSTRAINTS
    duplicates: int = 0
    source: Optional[str] = None

    def __len__(self):
        return len(self.records)

    def __contains__(self, arch):
        return self.surrogate is not None or arch.key in self.records

    def query(self, arch: CellArchitecture, budget: int = 108) -> EvalResult:
        if budget not in BUDGETS:
            raise ParameterError(f"budget must be one of {BUDGETS}, got {budget!r}")
        record = self.records.get(arch.key)
        if record is not None:
            val, test = record.metrics[budget]
            return EvalResult(val, test, budget, arch.key)
        if self.surrogate is not None:
            return self.surrogate.evaluate(arch, budget)
        raise MissingArchitectureError(f"architecture {arch.key} not in benchmark")

    def random_architecture(self, rng) -> CellArchitecture:
        """Uniform draw over stored cells (closed world) or over the space."""
        if self.closed_world:
            if not self.records:
                raise ParameterError("cannot draw from an empty benchmark")
            keys = list(self.records)
            return self.records[keys[int(rng.integers(len(keys)))]].arch
        return random_architecture(rng, self.constraints)

    def describe(self) -> dict:
        info = {"provenance": self.provenance, "closed_world": self.closed_world,
                "size": len(self.records)}
        if self.surrogate is not None:
            info["synthetic_seed"] = self.surrogate.seed
        if self.source is not None:
            info["source"] = self.source
        return info


def query(b: TabularBenchmark, arch: CellArchitecture, budget: int = 108) -> EvalResult:
    return b.query(arch, budget)


def synthetic_benchmark(seed: int = 0, c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> TabularBenchmark:
    return TabularBenchmark(provenance=SYNTHETIC, closed_world=False,
                            surrogate=SyntheticSurrogate(seed), constraints=c)


def _parse_record(data, lineno, c: SpaceConstraints) -> BenchmarkRecord:
    if not isinstance(data, dict):
        raise DatasetError("record must be a JSON object", lineno)
    try:
        arch = CellArchitecture.from_dict(data)
    except KeyError as exc:
        raise DatasetError(f"missing field {exc.args[0]!r}", lineno) from None
    except NasInitError as exc:
        raise DatasetError(f"malformed architecture: {exc}", lineno) from None
    if not is_valid(arch, c):
        raise DatasetError("invalid architecture (constraints or connectivity)", lineno)
    try:
        arch = prune(arch)
    except InvalidArchitectureError as exc:
        raise DatasetError(f"invalid architecture: {exc}", lineno) from None

    raw = data.get("metrics")
    if not isinstance(raw, dict):
        raise DatasetError("missing field 'metrics'", lineno)
    metrics = {}
    for b in BUDGETS:
        entry = raw.get(str(b))
        if not isinstance(entry, dict):
            raise DatasetError(f"missing field 'metrics.{b}'", lineno)
        pair = []
        for name in ("val", "test"):
            value = entry.get(name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DatasetError(f"field 'metrics.{b}.{name}' must be a number", lineno)
            if not 0.0 <= value <= 1.0:
                raise DatasetError(f"field 'metrics.{b}.{name}'={value} outside [0, 1]", lineno)
            pair.append(float(value))
        metrics[b] = tuple(pair)
    time = data.get("training_time")
    return BenchmarkRecord(arch, metrics, float(time) if time is not None else None)


def load_dataset(path, c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> TabularBenchmark:
    """Parse, validate, prune and key every record of a JSON-lines file.

    Duplicate keys keep the last record; their count is in ``.duplicates``.
    """
    bench = TabularBenchmark(provenance=INGESTED, closed_world=True, constraints=c,
                             source=os.fspath(path))
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"malformed JSON: {exc.msg}", lineno) from None
            record = _parse_record(data, lineno, c)
            key = record.arch.key
            if key in bench.records:
                bench.duplicates += 1
                del bench.records[key]
            bench.records[key] = record
    if bench.duplicates:
        LOG.warning("%s: %d duplicate architectures, kept the last occurrence",
                    path, bench.duplicates)
    return bench


def write_dataset(records: Iterable[BenchmarkRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def sample_records(b: TabularBenchmark, n: int, rng=None) -> list:
    """Uniform sample without replacement.

    For a synthetic benchmark, ``n`` distinct random cells are drawn and
    scored on demand.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if n < 0:
        raise ParameterError(f"sample size must be >= 0, got {n}")
    if b.surrogate is not None and not b.closed_world:
        seen, out = set(), []
        while len(out) < n:
            arch = random_architecture(rng, b.constraints)
            if arch.key not in seen:
                seen.add(arch.key)
                out.append(b.surrogate.record(arch))
        return out
    if n > len(b):
        raise ParameterError(f"requested {n} samples but the benchmark holds only {len(b)}")
    records = list(b.records.values())
    return [records[i] for i in rng.permutation(len(records))[:n]]
