"""Linear dimensionality reduction: centered PCA and uncentered truncated SVD.

Both use a dense LAPACK SVD (no randomized solver), and every component is
sign-fixed so that its largest-magnitude entry is positive. Refitting on the
same input therefore reproduces the model bit for bit.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ParameterError

__all__ = ["PCA", "TruncatedSVD", "fit_pca", "fit_truncated_svd", "transform", "REDUCERS", "make_reducer"]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), pivots])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _check_X(X, min_samples=2):
    try:
        X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    return X


class _BaseReducer(TransformerMixin, BaseEstimator):
    centered = False

    def __init__(self, n_components=2):
        self.n_components = n_components

    def _max_components(self, n_samples, n_features):
        raise NotImplementedError

    def fit(self, X, y=None):
        X = _check_X(X)
        n, d = X.shape
        k = self.n_components
        upper = self._max_components(n, d)
        if not isinstance(k, (int, np.integer)) or not 1 <= k <= upper:
            raise ParameterError(
                f"n_components must be in [1, {upper}] for {n}x{d} input, got {k!r}")

        self.mean_ = X.mean(axis=0) if self.centered else np.zeros(d)
        Xc = X - self.mean_
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
        self.components_ = _fix_signs(vt[:k])
        self.singular_values_ = s[:k].copy()
        self.n_features_in_ = d
        self.n_samples_fit_ = n
        self._set_variance(Xc, s[:k])
        return self

    def _set_variance(self, Xc, s):
        raise NotImplementedError

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = _check_X(X, min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}")
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        Z = np.asarray(Z, dtype=np.float64)
        return Z @ self.components_ + self.mean_

    def get_feature_names_out(self, input_features=None):
        return np.asarray([f"c{i}" for i in range(len(self.components_))], dtype=object)


class PCA(_BaseReducer):
    """Principal component analysis on column-centered data.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
    mean_ : ndarray of shape (n_features,)
    explained_variance_ : ndarray, sample variance (ddof=1) along each component
    explained_variance_ratio_ : ndarray, share of the total sample variance
    """

    method = "pca"
    centered = True

    def _max_components(self, n_samples, n_features):
        return min(n_samples - 1, n_features)

    def _set_variance(self, Xc, s):
        n = Xc.shape[0]
        self.explained_variance_ = s**2 / (n - 1)
        total = Xc.var(axis=0, ddof=1).sum()
        self.explained_variance_ratio_ = (
            self.explained_variance_ / total if total > 0 else np.zeros_like(s))


class TruncatedSVD(_BaseReducer):
    """Truncated SVD without centering, suited to sparse non-negative features.

    ``explained_variance_ratio_`` is the share of squared Frobenius norm
    captured by each component (``s_i**2 / ||X||_F**2``), which keeps the
    ratios nonincreasing and summing to at most one.
    """

    method = "tsvd"
    centered = False

    def _max_components(self, n_samples, n_features):
        return min(n_samples, n_features)

    def _set_variance(self, Xc, s):
        energy = float(np.sum(Xc**2))
        self.explained_variance_ = (Xc @ self.components_.T).var(axis=0, ddof=1)
        self.explained_variance_ratio_ = s**2 / energy if energy > 0 else np.zeros_like(s)


REDUCERS = {"pca": PCA, "tsvd": TruncatedSVD}


def make_reducer(method: str, n_components: int):
    try:
        return REDUCERS[method](n_components=n_components)
    except KeyError:
        raise ParameterError(f"unknown reducer {method!r}; choose from {sorted(REDUCERS)}") from None


def fit_pca(X, k: int) -> PCA:
    return PCA(n_components=k).fit(X)


def fit_truncated_svd(X, k: int) -> TruncatedSVD:
    return TruncatedSVD(n_components=k).fit(X)


def transform(model, X) -> np.ndarray:
    return model.transform(X)
