"""Density-based clustering with deterministic label numbering."""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from ..exceptions import ParameterError

__all__ = ["DBSCAN"]


class DBSCAN(ClusterMixin, BaseEstimator):
    """DBSCAN over Euclidean distance.

    A point is core when at least ``min_samples`` points (itself included)
    lie within ``eps``. Clusters are grown breadth-first from unvisited core
    points taken in row order, so cluster ``0`` contains the first core row.
    A border point joins the first cluster that reaches it. Noise is ``-1``.
    """

    def __init__(self, eps=0.30, min_samples=200):
        self.eps = eps
        self.min_samples = min_samples

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if not self.eps > 0:
            raise ParameterError(f"eps must be > 0, got {self.eps!r}")
        if self.min_samples < 1:
            raise ParameterError(f"min_samples must be >= 1, got {self.min_samples!r}")

        tree = cKDTree(X)
        neighbors = tree.query_ball_point(X, r=self.eps, return_sorted=True)
        core = np.fromiter((len(nb) >= self.min_samples for nb in neighbors), bool, len(X))

        labels = np.full(len(X), -1, dtype=np.intp)
        cluster = 0
        for seed in np.flatnonzero(core):
            if labels[seed] != -1:
                continue
            labels[seed] = cluster
            queue = deque([seed])
            while queue:
                point = queue.popleft()
                for nb in neighbors[point]:
                    if labels[nb] == -1:
                        labels[nb] = cluster
                        if core[nb]:
                            queue.append(nb)
            cluster += 1

        self.labels_ = labels
        self.core_sample_indices_ = np.flatnonzero(core)
        self.n_clusters_ = cluster
        self.n_features_in_ = X.shape[1]
        return self
