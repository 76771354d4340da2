"""Feature vectors for clustering cells together with their test accuracies.

Two layouts are produced, both fixed length:

* ``original`` (58): 7x7 zero-padded adjacency (49) + op codes (5) + accuracies (4)
* ``binary`` (298): 17x17 op-expanded adjacency (289) + op codes (5) + accuracies (4)
"""
from __future__ import annotations

from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ConstraintError, ParameterError
from .search_space import CellArchitecture, OperationLabel

__all__ = [
    "BUDGETS",
    "OP_CODES",
    "FRAME_NODES",
    "ORIGINAL_LENGTH",
    "BINARY_LENGTH",
    "flatten_row_major",
    "check_performance",
    "encode_original",
    "encode_binary",
    "encode",
    "feature_names",
    "ArchitectureEncoder",
]

BUDGETS = (4, 12, 36, 108)
FRAME_NODES = 7
N_OP_SLOTS = FRAME_NODES - 2
OP_CODES = {
    OperationLabel.CONV1X1: 1,
    OperationLabel.CONV3X3: 2,
    OperationLabel.MAXPOOL3X3: 3,
}
# expanded nodes: input, (slot, op) for 5 slots x 3 ops, output
_EXPANDED_OPS = sorted(OP_CODES, key=OP_CODES.get)
EXPANDED_NODES = 2 + N_OP_SLOTS * len(_EXPANDED_OPS)
ORIGINAL_LENGTH = FRAME_NODES**2 + N_OP_SLOTS + len(BUDGETS)
BINARY_LENGTH = EXPANDED_NODES**2 + N_OP_SLOTS + len(BUDGETS)

KINDS = ("original", "binary")


def flatten_row_major(matrix) -> np.ndarray:
    """C-order flattening: element (i, j) of an n x n matrix lands at i*n + j."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {matrix.shape}")
    return matrix.ravel(order="C").astype(float)


def check_performance(perf) -> np.ndarray:
    perf = np.asarray(perf, dtype=float)
    if perf.shape != (len(BUDGETS),):
        raise ParameterError(f"expected {len(BUDGETS)} accuracies, got shape {perf.shape}")
    if not np.all((perf >= 0.0) & (perf <= 1.0)):
        raise ParameterError(f"accuracies must lie in [0, 1], got {perf.tolist()}")
    return perf


def _check_frame(arch: CellArchitecture):
    if arch.n_nodes > FRAME_NODES:
        raise ConstraintError(f"cell has {arch.n_nodes} nodes, encodings hold at most {FRAME_NODES}")


def _op_codes(arch: CellArchitecture) -> np.ndarray:
    codes = np.zeros(N_OP_SLOTS)
    codes[: len(arch.ops)] = [OP_CODES[o] for o in arch.ops]
    return codes


def encode_original(arch: CellArchitecture, perf) -> np.ndarray:
    """Short encoding; the cell occupies the top-left block of the 7x7 frame
    and keeps its own node indices (the output stays at ``n - 1``)."""
    _check_frame(arch)
    perf = check_performance(perf)
    frame = np.zeros((FRAME_NODES, FRAME_NODES))
    n = arch.n_nodes
    frame[:n, :n] = arch.matrix
    return np.concatenate([flatten_row_major(frame), _op_codes(arch), perf])


def _expanded_index(arch: CellArchitecture, node: int) -> int:
    if node == 0:
        return 0
    if node == arch.n_nodes - 1:
        return EXPANDED_NODES - 1
    op = arch.ops[node - 1]
    return 1 + (node - 1) * len(_EXPANDED_OPS) + _EXPANDED_OPS.index(op)


def encode_binary(arch: CellArchitecture, perf) -> np.ndarray:
    """Long encoding over op-typed nodes.

    Entry (u, v) of the 17x17 block is 1 iff the cell has the corresponding
    edge and each intermediate endpoint carries exactly the op of its
    expanded node, so the block holds one 1 per edge of the cell.
    """
    _check_frame(arch)
    perf = check_performance(perf)
    expanded = np.zeros((EXPANDED_NODES, EXPANDED_NODES))
    index = [_expanded_index(arch, v) for v in range(arch.n_nodes)]
    rows, cols = np.nonzero(arch.matrix)
    expanded[[index[r] for r in rows], [index[c] for c in cols]] = 1.0
    return np.concatenate([flatten_row_major(expanded), _op_codes(arch), perf])


def encode(arch: CellArchitecture, perf, kind: str = "original") -> np.ndarray:
    if kind == "original":
        return encode_original(arch, perf)
    if kind == "binary":
        return encode_binary(arch, perf)
    raise ParameterError(f"unknown encoding {kind!r}; choose from {KINDS}")


def feature_names(kind: str = "original") -> list:
    if kind == "original":
        head = [f"a{i}" for i in range(FRAME_NODES**2)]
    elif kind == "binary":
        head = [f"e{i}" for i in range(EXPANDED_NODES**2)]
    else:
        raise ParameterError(f"unknown encoding {kind!r}; choose from {KINDS}")
    return head + [f"op{i}" for i in range(N_OP_SLOTS)] + [f"acc{b}" for b in BUDGETS]


def _split_item(item):
    if hasattr(item, "arch"):
        return item.arch, item.test_accuracies()
    arch, perf = item
    return arch, perf


class ArchitectureEncoder(TransformerMixin, BaseEstimator):
    """Stateless transformer from cells to a feature matrix.

    ``transform`` takes an iterable whose items are either ``(arch, perf)``
    pairs or benchmark records (anything with ``.arch`` and
    ``.test_accuracies()``).
    """

    def __init__(self, kind="original"):
        self.kind = kind

    def fit(self, X=None, y=None):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown encoding {self.kind!r}; choose from {KINDS}")
        self.n_features_out_ = ORIGINAL_LENGTH if self.kind == "original" else BINARY_LENGTH
        return self

    def transform(self, X: Iterable) -> np.ndarray:
        if not hasattr(self, "n_features_out_"):
            self.fit()
        rows = [encode(*_split_item(item), kind=self.kind) for item in X]
        if not rows:
            return np.zeros((0, self.n_features_out_))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(feature_names(self.kind), dtype=object)
