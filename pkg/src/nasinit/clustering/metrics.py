"""Internal cluster-validity indices.

Rows labelled ``-1`` (DBSCAN noise) are dropped before any index is computed.
Degenerate configurations that make an index unbounded return ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.utils.validation import check_array

from ..exceptions import ParameterError, UndefinedMetricError

__all__ = [
    "MetricReport",
    "silhouette_score",
    "calinski_harabasz_score",
    "davies_bouldin_score",
    "evaluate",
]

_CHUNK = 1024


@dataclass(frozen=True)
class MetricReport:
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float

    @property
    def degenerate(self) -> bool:
        """True when an index hit its infinity sentinel."""
        return math.isinf(self.calinski_harabasz) or math.isinf(self.davies_bouldin)

    def as_dict(self) -> dict:
        return {"silhouette": self.silhouette,
                "calinski_harabasz": self.calinski_harabasz,
                "davies_bouldin": self.davies_bouldin}


def _prepare(X, labels):
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    labels = np.asarray(labels)
    if labels.shape != (len(X),):
        raise ParameterError(f"labels has shape {labels.shape}, expected ({len(X)},)")
    keep = labels != -1
    X, labels = X[keep], labels[keep]
    uniq, codes = np.unique(labels, return_inverse=True)
    if len(uniq) < 2:
        raise UndefinedMetricError(f"need at least 2 clusters, got {len(uniq)}")
    return X, codes, len(uniq)


def silhouette_score(X, labels) -> float:
    """Mean silhouette; members of singleton clusters score 0."""
    X, codes, k = _prepare(X, labels)
    n = len(X)
    counts = np.bincount(codes, minlength=k).astype(float)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), codes] = 1.0
    scores = np.empty(n)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        sums = cdist(X[start:stop], X) @ onehot
        own = codes[start:stop]
        rows = np.arange(stop - start)
        own_count = counts[own]
        a = np.where(own_count > 1, sums[rows, own] / np.maximum(own_count - 1, 1), 0.0)
        mean_other = sums / counts
        mean_other[rows, own] = np.inf
        b = mean_other.min(axis=1)
        denom = np.maximum(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(denom > 0, (b - a) / denom, 0.0)
        scores[start:stop] = np.where(own_count > 1, s, 0.0)
    return float(scores.mean())


def calinski_harabasz_score(X, labels) -> float:
    """Between/within dispersion ratio; ``inf`` when within dispersion is 0."""
    X, codes, k = _prepare(X, labels)
    n = len(X)
    if k >= n:
        raise UndefinedMetricError(f"need fewer clusters than points, got k={k}, n={n}")
    overall = X.mean(axis=0)
    between = within = 0.0
    for j in range(k):
        members = X[codes == j]
        center = members.mean(axis=0)
        between += len(members) * float(((center - overall) ** 2).sum())
        within += float(((members - center) ** 2).sum())
    if within == 0.0:
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


def davies_bouldin_score(X, labels) -> float:
    """Average worst-case similarity between clusters; ``inf`` when two
    centroids coincide."""
    X, codes, k = _prepare(X, labels)
    centers = np.array([X[codes == j].mean(axis=0) for j in range(k)])
    spread = np.array([np.sqrt(((X[codes == j] - centers[j]) ** 2).sum(axis=1)).mean()
                       for j in range(k)])
    sep = cdist(centers, centers)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0.0):
        return math.inf
    ratio = (spread[:, None] + spread[None, :]) / np.where(off, sep, 1.0)
    ratio[~off] = -np.inf
    return float(ratio.max(axis=1).mean())


def evaluate(X, labels) -> MetricReport:
    return MetricReport(silhouette_score(X, labels),
                        calinski_harabasz_score(X, labels),
                        davies_bouldin_score(X, labels))
