"""K-means with k-means++ seeding and deterministic restarts."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import ParameterError

__all__ = ["KMeans", "kmeans_plusplus", "squared_distances"]

# rows per block when materialising point-to-center differences
_BLOCK_ELEMS = 1 << 22


def squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances, computed from differences (not the
    ``|x|^2 + |c|^2 - 2xc`` expansion) so that ties stay exact."""
    n, d = X.shape
    k = len(centers)
    out = np.empty((n, k))
    step = max(1, _BLOCK_ELEMS // max(1, k * d))
    for start in range(0, n, step):
        diff = X[start:start + step, None, :] - centers[None, :, :]
        out[start:start + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def kmeans_plusplus(X: np.ndarray, n_clusters: int, rng: np.random.Generator):
    """Classic k-means++: first center uniform, then each new center drawn
    with probability proportional to its squared distance to the nearest
    chosen center. Returns ``(centers, indices)``."""
    n = len(X)
    indices = np.empty(n_clusters, dtype=np.intp)
    indices[0] = rng.integers(n)
    closest = squared_distances(X, X[indices[:1]])[:, 0]
    for c in range(1, n_clusters):
        cumulative = np.cumsum(closest)
        total = cumulative[-1]
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        indices[c] = idx
        closest = np.minimum(closest, squared_distances(X, X[idx:idx + 1])[:, 0])
    return X[indices].copy(), indices


def _relocate_empty(labels, dist, counts, n_clusters):
    """Give each empty cluster the point farthest from its own center, taken
    from a cluster that keeps at least one member."""
    empty = np.flatnonzero(counts == 0)
    if not len(empty):
        return labels
    labels = labels.copy()
    own = dist[np.arange(len(labels)), labels]
    order = np.argsort(-own, kind="stable")
    pos = 0
    for cluster in empty:
        while counts[labels[order[pos]]] <= 1:
            pos += 1
        point = order[pos]
        counts[labels[point]] -= 1
        labels[point] = cluster
        counts[cluster] = 1
        pos += 1
    return labels


def _lloyd(X, centers, max_iter, tol):
    k = len(centers)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = squared_distances(X, centers)
        labels = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(len(X)), labels].sum()))
        counts = np.bincount(labels, minlength=k)
        labels = _relocate_empty(labels, dist, counts, k)
        counts = np.bincount(labels, minlength=k)
        new_centers = np.zeros_like(centers)
        np.add.at(new_centers, labels, X)
        new_centers /= counts[:, None]
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    dist = squared_distances(X, centers)
    labels = np.argmin(dist, axis=1)
    inertia = float(dist[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return centers, labels, inertia, n_iter, history


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd's K-means from k-means++ seeds.

    Each of the ``n_init`` restarts draws from its own generator spawned from
    ``random_state``; the run with the lowest inertia wins (earliest restart
    on ties). Assignment ties go to the lowest cluster index.

    Attributes
    ----------
    cluster_centers_, labels_, inertia_, n_iter_
    inertia_history_ : list of float
        Inertia after every assignment step of the winning restart.
    """

    def __init__(self, n_clusters=10, n_init=50, max_iter=500, tol=1e-4, random_state=0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        k = self.n_clusters
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ParameterError(f"n_clusters must be a positive integer, got {k!r}")
        if self.n_init < 1 or self.max_iter < 1:
            raise ParameterError("n_init and max_iter must be >= 1")
        n_distinct = len(np.unique(X, axis=0))
        if k > n_distinct:
            raise ParameterError(f"n_clusters={k} exceeds the {n_distinct} distinct rows")

        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_init)
        best = None
        for seed in seeds:
            rng = np.random.default_rng(seed)
            init, _ = kmeans_plusplus(X, k, rng)
            run = _lloyd(X, init, self.max_iter, self.tol)
            if best is None or run[2] < best[2]:
                best = run
        (self.cluster_centers_, self.labels_, self.inertia_,
         self.n_iter_, self.inertia_history_) = best
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return np.argmin(squared_distances(X, self.cluster_centers_), axis=1)

    def transform(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return np.sqrt(squared_distances(X, self.cluster_centers_))
