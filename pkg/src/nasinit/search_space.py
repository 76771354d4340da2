"""Cell search space: representation, validity, pruning, keying and mutation.

A cell is a DAG stored as a strictly upper-triangular 0/1 adjacency matrix.
Node 0 is the input, node ``n - 1`` the output, and every node in between
carries one searchable operation label.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .exceptions import (
    InvalidArchitectureError,
    MutationError,
    ParameterError,
    SamplingError,
    StructuralError,
)

__all__ = [
    "OperationLabel",
    "SEARCH_OPS",
    "SpaceConstraints",
    "DEFAULT_CONSTRAINTS",
    "CellArchitecture",
    "is_valid",
    "prune",
    "canonical_key",
    "random_architecture",
    "mutate_hidden_state",
    "mutate_operation",
    "mutate",
    "MUTATION_POLICIES",
]

MAX_ATTEMPTS = 10000


class OperationLabel(str, enum.Enum):
    CONV3X3 = "conv3x3"
    CONV1X1 = "conv1x1"
    MAXPOOL3X3 = "maxpool3x3"
    # terminal sentinels, never used on intermediate nodes
    INPUT = "input"
    OUTPUT = "output"

    def __str__(self):
        return self.value


SEARCH_OPS = (OperationLabel.CONV3X3, OperationLabel.CONV1X1, OperationLabel.MAXPOOL3X3)
_TERMINALS = (OperationLabel.INPUT, OperationLabel.OUTPUT)


def _as_op(label) -> OperationLabel:
    try:
        op = OperationLabel(str(label).lower())
    except ValueError:
        raise StructuralError(f"unknown operation label {label!r}") from None
    return op


@dataclass(frozen=True)
class SpaceConstraints:
    """Limits of the cell family (defaults: 7 nodes, 9 edges, three ops)."""

    max_nodes: int = 7
    max_edges: int = 9
    ops: tuple = SEARCH_OPS

    def __post_init__(self):
        if self.max_nodes < 2:
            raise ParameterError(f"max_nodes must be >= 2, got {self.max_nodes}")
        if self.max_edges < 1:
            raise ParameterError(f"max_edges must be >= 1, got {self.max_edges}")
        ops = tuple(_as_op(o) for o in self.ops)
        if not ops or any(o in _TERMINALS for o in ops):
            raise ParameterError("ops must be a non-empty set of searchable labels")
        object.__setattr__(self, "ops", ops)


DEFAULT_CONSTRAINTS = SpaceConstraints()


@dataclass(frozen=True, eq=True)
class CellArchitecture:
    """Immutable cell: adjacency matrix plus labels of the intermediate nodes.

    ``adjacency`` accepts any nested sequence or array; it is stored as a tuple
    of tuples of ints. ``ops`` has length ``n - 2``.
    """

    adjacency: tuple
    ops: tuple = field(default=())

    def __post_init__(self):
        try:
            rows = tuple(tuple(int(v) for v in row) for row in np.asarray(self.adjacency).tolist())
        except (TypeError, ValueError):
            raise StructuralError("adjacency must be a square matrix of integers") from None
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise StructuralError(f"adjacency must be square with side >= 2, got {n} rows")
        if any(v not in (0, 1) for r in rows for v in r):
            raise StructuralError("adjacency entries must be 0 or 1")
        ops = tuple(_as_op(o) for o in self.ops)
        if len(ops) != n - 2:
            raise StructuralError(f"expected {n - 2} ops for {n} nodes, got {len(ops)}")
        if any(o in _TERMINALS for o in ops):
            raise StructuralError("input/output labels cannot label intermediate nodes")
        object.__setattr__(self, "adjacency", rows)
        object.__setattr__(self, "ops", ops)

    @property
    def n_nodes(self) -> int:
        return len(self.adjacency)

    @cached_property
    def n_edges(self) -> int:
        return sum(map(sum, self.adjacency))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=np.int8)

    @property
    def labels(self) -> tuple:
        """Labels of every node, terminals included."""
        return (OperationLabel.INPUT, *self.ops, OperationLabel.OUTPUT)

    @cached_property
    def _out_masks(self) -> tuple:
        return tuple(sum(1 << j for j, v in enumerate(row) if v) for row in self.adjacency)

    @cached_property
    def key(self) -> str:
        """Canonical (isomorphism-invariant) key of the pruned cell."""
        return canonical_key(self)

    def to_dict(self) -> dict:
        return {"adjacency": [list(r) for r in self.adjacency], "ops": [o.value for o in self.ops]}

    @classmethod
    def from_dict(cls, data: dict) -> "CellArchitecture":
        adjacency = data["adjacency"]
        ops = list(data.get("ops", []))
        # tolerate the upstream convention of labelling terminals too
        if len(ops) == len(adjacency) and ops and str(ops[0]).lower() == "input" \
                and str(ops[-1]).lower() == "output":
            ops = ops[1:-1]
        return cls(adjacency, ops)


def _trusted(adjacency: tuple, ops: tuple, pruned: bool = False) -> CellArchitecture:
    """Build a cell from already-normalized tuples, skipping validation."""
    cell = object.__new__(CellArchitecture)
    object.__setattr__(cell, "adjacency", adjacency)
    object.__setattr__(cell, "ops", ops)
    if pruned:
        cell.__dict__["_pruned"] = True
    return cell


def _is_upper(arch: CellArchitecture) -> bool:
    return all(v == 0 for i, row in enumerate(arch.adjacency) for v in row[: i + 1])


def _forward_reach(masks, n) -> int:
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        i = 0
        f = frontier
        while f:
            if f & 1:
                nxt |= masks[i]
            f >>= 1
            i += 1
        frontier = nxt & ~seen
        seen |= nxt
    return seen


def _backward_reach(masks, n) -> int:
    # edges only point forward, so one reverse sweep suffices
    seen = 1 << (n - 1)
    for i in range(n - 2, -1, -1):
        if masks[i] & seen:
            seen |= 1 << i
    return seen


def is_valid(arch: CellArchitecture, c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> bool:
    """True iff ``arch`` respects the node/edge limits, is a topologically
    ordered DAG, uses only ``c.ops`` and connects input to output."""
    if not isinstance(arch, CellArchitecture):
        raise StructuralError(f"expected CellArchitecture, got {type(arch).__name__}")
    n = arch.n_nodes
    if n > c.max_nodes or arch.n_edges > c.max_edges:
        return False
    if not _is_upper(arch):
        return False
    if any(o not in c.ops for o in arch.ops):
        return False
    return bool((_forward_reach(arch._out_masks, n) >> (n - 1)) & 1)


def _live_nodes(masks, n) -> int:
    return _forward_reach(masks, n) & _backward_reach(masks, n)


def _restrict(masks, ops, live, n) -> CellArchitecture:
    keep = [i for i in range(n) if (live >> i) & 1]
    adjacency = tuple(tuple((masks[i] >> j) & 1 for j in keep) for i in keep)
    return _trusted(adjacency, tuple(ops[i - 1] for i in keep[1:-1]), pruned=True)


def prune(arch: CellArchitecture) -> CellArchitecture:
    """Drop every node that is not on some input-to-output path.

    Raises InvalidArchitectureError when the output is unreachable.
    """
    if arch.__dict__.get("_pruned"):
        return arch
    n = arch.n_nodes
    if not _is_upper(arch):
        raise InvalidArchitectureError("adjacency is not strictly upper-triangular")
    masks = arch._out_masks
    live = _live_nodes(masks, n)
    if not (live >> (n - 1)) & 1:
        raise InvalidArchitectureError("no path from input to output")
    if live == (1 << n) - 1:
        # extraneous edges cannot exist once every node is live
        arch.__dict__["_pruned"] = True
        return arch
    return _restrict(masks, arch.ops, live, n)


@lru_cache(maxsize=1 << 18)
def _wl_hash(adjacency: tuple, ops: tuple, rounds: int) -> str:
    n = len(adjacency)
    md5 = hashlib.md5
    join = b"".join
    labels = ["-1", *(o.value for o in ops), "-2"]
    in_nbrs = [[w for w in range(n) if adjacency[w][v]] for v in range(n)]
    out_nbrs = [[w for w in range(n) if adjacency[v][w]] for v in range(n)]
    hashes = [md5(f"({len(out_nbrs[v])}, {len(in_nbrs[v])}, {labels[v]!r})".encode()).digest()
              for v in range(n)]
    nodes = list(zip(range(n), in_nbrs, out_nbrs))
    for _ in range(rounds):
        hashes = [
            md5(join(sorted([hashes[w] for w in ins])) + b"|"
                + join(sorted([hashes[w] for w in outs])) + b"|" + hashes[v]).digest()
            for v, ins, outs in nodes
        ]
    return md5(join(sorted(hashes))).hexdigest()


def canonical_key(arch: CellArchitecture, rounds: int = DEFAULT_CONSTRAINTS.max_nodes) -> str:
    """Weisfeiler-Lehman style hash of ``prune(arch)``.

    Each node starts from (out-degree, in-degree, label); every round rehashes
    it together with the sorted hashes of its in- and out-neighbours. The
    final key hashes the sorted multiset of node hashes, so relabelling
    intermediate nodes does not change it.
    """
    cell = prune(arch)
    return _wl_hash(cell.adjacency, cell.ops, rounds)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@lru_cache(maxsize=None)
def _upper_entries(n: int) -> tuple:
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def random_architecture(rng=None, c: SpaceConstraints = DEFAULT_CONSTRAINTS,
                        max_attempts: int = MAX_ATTEMPTS) -> CellArchitecture:
    """Rejection-sample a valid, pruned cell.

    Every upper-triangular bit of a ``c.max_nodes`` frame and every
    intermediate label are drawn uniformly; the draw is kept once its pruned
    form passes :func:`is_valid`.
    """
    rng = _rng(rng)
    n = c.max_nodes
    entries = _upper_entries(n)
    for _ in range(max_attempts):
        bits = rng.integers(0, 2, size=len(entries)).tolist()
        ops = tuple(c.ops[i] for i in rng.integers(0, len(c.ops), size=n - 2).tolist())
        masks = [0] * n
        for (i, j), bit in zip(entries, bits):
            if bit:
                masks[i] |= 1 << j
        live = _live_nodes(masks, n)
        if not (live >> (n - 1)) & 1:
            continue
        cell = _restrict(masks, ops, live, n)
        if cell.n_edges <= c.max_edges:
            return cell
    raise SamplingError(f"no valid architecture after {max_attempts} attempts")


def _signature(cell: CellArchitecture) -> tuple:
    return cell.n_nodes, cell.n_edges, tuple(sorted(cell.ops))


def _frame_masks(arch: CellArchitecture, rng, c: SpaceConstraints):
    """Row masks of ``arch`` embedded in a ``c.max_nodes`` frame: isolated
    intermediate nodes (random labels) are inserted just before the output."""
    n = arch.n_nodes
    extra = max(c.max_nodes - n, 0)
    if not extra:
        return list(arch._out_masks), arch.ops
    m = n + extra
    out_bit = 1 << (n - 1)
    masks = []
    for mask in arch._out_masks[:-1]:
        moved = mask & (out_bit - 1)
        if mask & out_bit:
            moved |= 1 << (m - 1)
        masks.append(moved)
    masks.extend([0] * (extra + 1))
    new_ops = tuple(c.ops[i] for i in rng.integers(0, len(c.ops), size=extra).tolist())
    return masks, arch.ops + new_ops


def mutate_hidden_state(arch: CellArchitecture, rng=None,
                        c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> CellArchitecture:
    """Toggle one edge of the unpruned frame.

    Cells smaller than ``c.max_nodes`` are first padded with disconnected
    nodes, so a toggle can also grow the cell. Candidate entries are tried in
    a random order; the first whose pruned result is valid and not isomorphic
    to ``prune(arch)`` wins, which is a uniform draw over admissible toggles.
    """
    rng = _rng(rng)
    base = prune(arch)
    base_sig = _signature(base)
    masks, ops = _frame_masks(arch, rng, c)
    m = len(masks)
    entries = _upper_entries(m)
    for idx in rng.permutation(len(entries)).tolist():
        i, j = entries[idx]
        masks[i] ^= 1 << j
        live = _live_nodes(masks, m)
        child = _restrict(masks, ops, live, m) if (live >> (m - 1)) & 1 else None
        masks[i] ^= 1 << j
        if child is None or child.n_edges > c.max_edges:
            continue
        # a cheap invariant mismatch already rules out isomorphism
        if _signature(child) != base_sig or child.key != base.key:
            return child
    raise MutationError("no single edge toggle yields a new valid cell")


def mutate_operation(arch: CellArchitecture, rng=None,
                     c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> CellArchitecture:
    """Relabel one uniformly chosen intermediate node with a different op."""
    rng = _rng(rng)
    k = len(arch.ops)
    if k == 0:
        raise MutationError("cell has no intermediate node to relabel")
    node = int(rng.integers(k))
    choices = [o for o in c.ops if o != arch.ops[node]]
    if not choices:
        raise MutationError("op set has no alternative label")
    ops = list(arch.ops)
    ops[node] = choices[int(rng.integers(len(choices)))]
    return _trusted(arch.adjacency, tuple(ops), pruned=bool(arch.__dict__.get("_pruned")))


MUTATION_POLICIES = ("both-steps", "one-of")


def mutate(arch: CellArchitecture, rng=None, policy: str = "both-steps",
           c: SpaceConstraints = DEFAULT_CONSTRAINTS) -> CellArchitecture:
    """Hidden-state then operation mutation (``"both-steps"``), or one of the
    two picked uniformly (``"one-of"``). A failing step is skipped; only when
    both fail is MutationError raised."""
    rng = _rng(rng)
    if policy == "both-steps":
        steps = (mutate_hidden_state, mutate_operation)
    elif policy == "one-of":
        steps = (mutate_hidden_state, mutate_operation)
        if rng.random() < 0.5:
            steps = steps[::-1]
    else:
        raise ParameterError(f"unknown mutation policy {policy!r}; choose from {MUTATION_POLICIES}")

    child, applied = arch, 0
    for step in steps:
        try:
            child = step(child, rng, c)
        except MutationError:
            continue
        applied += 1
        if policy == "one-of":
            break
    if not applied:
        raise MutationError("both hidden-state and operation mutation failed")
    return child
