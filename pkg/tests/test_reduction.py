import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from nasinit.exceptions import ParameterError
from nasinit.reduction import PCA, TruncatedSVD, fit_pca, fit_truncated_svd, make_reducer, transform


def sign_fixed(rows):
    rows = np.array(rows, dtype=float)
    for r in rows:
        if r[np.argmax(np.abs(r))] < 0:
            r *= -1
    return rows


def pca_oracle(X, k):
    """Top-k eigenvectors of the sample covariance."""
    cov = np.cov(X, rowvar=False)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    return sign_fixed(vecs[:, order].T), vals[order]


def tsvd_oracle(X, k):
    _, s, vt = scipy.linalg.svd(X, full_matrices=False, lapack_driver="gesvd")
    return sign_fixed(vt[:k]), s[:k]


def test_rank_one_line():
    x = np.linspace(-2, 3, 11)
    X = np.column_stack([x, 2 * x])
    m = fit_pca(X, 1)
    assert np.allclose(m.components_[0], np.array([1, 2]) / np.sqrt(5), atol=1e-12)
    assert np.allclose(m.explained_variance_ratio_, [1.0])


def test_pca_full_rank_roundtrip():
    X = np.random.default_rng(0).normal(size=(12, 5))
    m = fit_pca(X, 5)
    assert np.allclose(m.inverse_transform(m.transform(X)), X, atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_pca_matches_covariance_eigenvectors(seed):
    X = np.random.default_rng(seed).normal(size=(50, 10))
    ref, vals = pca_oracle(X, 4)
    m = fit_pca(X, 4)
    assert np.allclose(m.components_, ref, atol=1e-6)
    assert np.allclose(m.explained_variance_, vals, atol=1e-9)


def test_pca_projection_variance_equals_explained_variance():
    X = np.random.default_rng(1).normal(size=(40, 6)) * [5, 3, 2, 1, 1, 0.5]
    m = fit_pca(X, 3)
    Z = m.transform(X)
    assert np.allclose(Z.var(axis=0, ddof=1), m.explained_variance_, rtol=1e-10)


def test_tsvd_constructed_singular_values():
    X = np.array([[3.0, 0, 0], [0, 1.0, 0]])
    m = fit_truncated_svd(X, 2)
    assert np.allclose(m.singular_values_, [3, 1], atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_tsvd_matches_full_svd(seed):
    X = np.random.default_rng(seed).random((30, 8))
    ref, s = tsvd_oracle(X, 5)
    m = fit_truncated_svd(X, 5)
    assert np.allclose(m.components_, ref, atol=1e-6)
    assert np.allclose(m.singular_values_, s, atol=1e-9)
    assert np.allclose(m.transform(X), X @ ref.T, atol=1e-9)


def test_tsvd_zero_matrix():
    m = fit_truncated_svd(np.zeros((5, 3)), 2)
    assert np.allclose(m.components_ @ m.components_.T, np.eye(2), atol=1e-8)
    assert np.all(m.explained_variance_ == 0)
    assert np.all(m.explained_variance_ratio_ == 0)


def test_pca_zero_variance():
    m = fit_pca(np.ones((6, 3)), 2)
    assert np.all(m.explained_variance_ == 0)
    assert np.all(m.explained_variance_ratio_ == 0)


def test_tsvd_zero_row_maps_to_zero():
    m = fit_truncated_svd(np.random.default_rng(0).random((10, 4)), 2)
    assert np.all(m.transform(np.zeros((1, 4))) == 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 20), st.integers(2, 8),
       st.sampled_from(["pca", "tsvd"]))
def test_orthonormal_and_ordered(seed, n, d, method):
    X = np.random.default_rng(seed).normal(size=(n, d))
    k = min(n - 1, d)
    m = make_reducer(method, k).fit(X)
    assert np.allclose(m.components_ @ m.components_.T, np.eye(k), atol=1e-8)
    assert np.all(np.diff(m.singular_values_) <= 1e-12)
    assert np.all(np.diff(m.explained_variance_ratio_) <= 1e-12)


def principal_angles(A, B):
    qa, _ = np.linalg.qr(A.T)
    qb, _ = np.linalg.qr(B.T)
    return np.arccos(np.clip(np.linalg.svd(qa.T @ qb, compute_uv=False), -1, 1))


def test_centered_data_gives_same_subspace():
    X = np.random.default_rng(3).normal(size=(25, 6))
    X -= X.mean(axis=0)
    a = fit_pca(X, 3).components_
    b = fit_truncated_svd(X, 3).components_
    assert np.max(principal_angles(a, b)) < 1e-6


def test_deterministic_and_bit_stable():
    X = np.random.default_rng(4).random((20, 7))
    m1, m2 = fit_truncated_svd(X, 3), fit_truncated_svd(X.copy(), 3)
    assert np.array_equal(m1.components_, m2.components_)
    assert np.array_equal(transform(m1, X), transform(m1, X))


@pytest.mark.parametrize("cls,n,d,k", [(PCA, 5, 3, 4), (PCA, 5, 8, 5), (TruncatedSVD, 5, 3, 4),
                                        (PCA, 5, 3, 0)])
def test_component_range_checked(cls, n, d, k):
    with pytest.raises(ParameterError):
        cls(n_components=k).fit(np.random.default_rng(0).random((n, d)))


def test_dimension_mismatch_and_unknown_method():
    m = fit_pca(np.random.default_rng(0).random((6, 3)), 2)
    with pytest.raises(ParameterError):
        m.transform(np.zeros((2, 4)))
    with pytest.raises(ParameterError):
        make_reducer("ica", 2)


def test_estimator_api():
    m = TruncatedSVD(n_components=3)
    assert m.get_params() == {"n_components": 3}
    assert clone(m).set_params(n_components=2).n_components == 2
    Z = m.fit_transform(np.random.default_rng(0).random((8, 5)))
    assert Z.shape == (8, 3)
    assert list(m.get_feature_names_out()) == ["c0", "c1", "c2"]
