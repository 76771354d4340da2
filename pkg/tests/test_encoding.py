import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from nasinit.benchmark import synthetic_benchmark
from nasinit.encoding import (
    BINARY_LENGTH,
    ORIGINAL_LENGTH,
    ArchitectureEncoder,
    encode,
    encode_binary,
    encode_original,
    feature_names,
    flatten_row_major,
)
from nasinit.exceptions import ConstraintError, ParameterError
from nasinit.search_space import CellArchitecture, SpaceConstraints, random_architecture

PERF = [0.5, 0.6, 0.7, 0.8]
MINIMAL = CellArchitecture([[0, 1], [0, 0]], [])


def test_flatten_small_cases():
    assert flatten_row_major([[0, 1], [0, 0]]).tolist() == [0, 1, 0, 0]
    assert flatten_row_major(np.zeros((3, 3))).tolist() == [0] * 9
    with pytest.raises(ParameterError):
        flatten_row_major([[0, 1, 0]])


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_flatten_index_formula(n, seed):
    m = np.random.default_rng(seed).integers(0, 2, size=(n, n))
    flat = flatten_row_major(m)
    for i in range(n):
        for j in range(n):
            assert flat[i * n + j] == m[i, j]


def test_minimal_cell_original_vector():
    v = encode_original(MINIMAL, [0, 0, 0, 0])
    expected = np.zeros(58)
    expected[1] = 1.0
    assert v.tolist() == expected.tolist()


def test_op_codes_and_accuracy_tail():
    arch = CellArchitecture([[0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0],
                             [0, 0, 0, 0, 1], [0, 0, 0, 0, 0]],
                            ["conv1x1", "conv3x3", "maxpool3x3"])
    v = encode_original(arch, PERF)
    assert v[49:54].tolist() == [1, 2, 3, 0, 0]
    assert v[54:].tolist() == PERF


def test_full_cell_lengths():
    adj = np.zeros((7, 7), dtype=int)
    for i in range(6):
        adj[i, i + 1] = 1
    arch = CellArchitecture(adj, ["conv3x3", "conv1x1", "maxpool3x3", "conv3x3", "conv1x1"])
    assert len(encode_original(arch, PERF)) == ORIGINAL_LENGTH == 58
    assert len(encode_binary(arch, PERF)) == BINARY_LENGTH == 298


def test_oversized_cell_raises():
    adj = np.zeros((8, 8), dtype=int)
    for i in range(7):
        adj[i, i + 1] = 1
    big = CellArchitecture(adj, ["conv3x3"] * 6)
    for kind in ("original", "binary"):
        with pytest.raises(ConstraintError):
            encode(big, PERF, kind)


def test_bad_inputs_raise():
    with pytest.raises(ParameterError):
        encode(MINIMAL, PERF, "ternary")
    with pytest.raises(ParameterError):
        encode_original(MINIMAL, [0.1, 0.2])
    with pytest.raises(ParameterError):
        encode_original(MINIMAL, [0.1, 0.2, 0.3, 1.5])


def _expanded_oracle(arch):
    """17x17 block built cell-by-cell from the definition."""
    ops = ["conv1x1", "conv3x3", "maxpool3x3"]
    names = ["in"] + [(i, o) for i in range(1, 6) for o in ops] + ["out"]
    n = arch.n_nodes

    def node_name(v):
        if v == 0:
            return "in"
        if v == n - 1:
            return "out"
        return (v, arch.ops[v - 1].value)

    block = np.zeros((17, 17))
    for u, a in enumerate(names):
        for w, b in enumerate(names):
            for i in range(n):
                for j in range(n):
                    if arch.adjacency[i][j] and node_name(i) == a and node_name(j) == b:
                        block[u, w] = 1
    return block.ravel()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_binary_block_matches_definition(seed):
    arch = random_architecture(np.random.default_rng(seed))
    v = encode_binary(arch, PERF)
    assert v[:289].tolist() == _expanded_oracle(arch).tolist()
    assert v[289:294].tolist() == encode_original(arch, PERF)[49:54].tolist()
    assert v[294:].tolist() == PERF


def test_binary_block_counts_edges():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        arch = random_architecture(rng)
        assert encode_binary(arch, PERF)[:289].sum() == arch.n_edges


def test_binary_block_distinguishes_one_op():
    a = CellArchitecture([[0, 1, 0], [0, 0, 1], [0, 0, 0]], ["conv3x3"])
    b = CellArchitecture([[0, 1, 0], [0, 0, 1], [0, 0, 0]], ["maxpool3x3"])
    assert encode_binary(a, PERF)[:289].tolist() != encode_binary(b, PERF)[:289].tolist()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1),
       st.lists(st.floats(0, 1), min_size=4, max_size=4),
       st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_structure_part_is_independent_of_accuracies(seed, p1, p2):
    arch = random_architecture(np.random.default_rng(seed))
    v1, v2 = encode_original(arch, p1), encode_original(arch, p2)
    assert v1[:54].tolist() == v2[:54].tolist()
    assert v1[54:].tolist() == p1
    assert encode_original(arch, p1).tolist() == v1.tolist()


def test_encoder_estimator_api():
    b = synthetic_benchmark(0)
    rng = np.random.default_rng(0)
    recs = [b.surrogate.record(random_architecture(rng)) for _ in range(20)]
    enc = ArchitectureEncoder("binary")
    assert enc.get_params() == {"kind": "binary"}
    X = enc.fit_transform(recs)
    assert X.shape == (20, 298)
    pairs = [(r.arch, r.test_accuracies()) for r in recs]
    assert np.array_equal(clone(enc).fit(pairs).transform(pairs), X)
    assert list(enc.get_feature_names_out()) == feature_names("binary")
    assert ArchitectureEncoder().fit_transform([]).shape == (0, 58)


def test_feature_names_original_layout():
    names = feature_names("original")
    assert names[:2] == ["a0", "a1"] and names[48] == "a48"
    assert names[49:] == ["op0", "op1", "op2", "op3", "op4", "acc4", "acc12", "acc36", "acc108"]


def test_smaller_frame_constraints_still_encode():
    arch = random_architecture(np.random.default_rng(0), SpaceConstraints(max_nodes=4))
    assert len(encode_original(arch, PERF)) == 58
