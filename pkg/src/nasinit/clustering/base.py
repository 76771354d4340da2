"""Method-agnostic clustering parameters, fitted models and centroid extraction."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..exceptions import EmptyResultError, ParameterError
from .dbscan import DBSCAN
from .kmeans import KMeans
from .mixture import BayesianGaussianMixture

__all__ = [
    "METHODS",
    "ClusterParams",
    "ClusterModel",
    "kmeans",
    "dbscan",
    "fit_bgm",
    "fit_clusters",
    "extract_centroids",
]

METHODS = ("kmeans", "dbscan", "bgm")


@dataclass(frozen=True)
class ClusterParams:
    """Clustering hyperparameters; defaults follow the reference setup
    (500 iterations, 50 K-means restarts, eps 0.30, 200 min samples)."""

    method: str = "kmeans"
    n_clusters: int = 10
    max_iter: int = 500
    n_init: int = 50
    eps: float = 0.30
    min_samples: int = 200
    covariance: str = "full"
    weight_prior: str = "dirichlet"
    tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown clustering method {self.method!r}; choose from {METHODS}")
        if self.covariance != "full":
            raise ParameterError("only full covariance matrices are supported")
        if self.weight_prior != "dirichlet":
            raise ParameterError("only the Dirichlet weight prior is supported")

    def with_(self, **changes) -> "ClusterParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ClusterModel:
    """Result of one clustering run in reduced space."""

    method: str
    labels: np.ndarray
    centers: np.ndarray
    n_effective_clusters: int
    inertia: Optional[float] = None
    weights: Optional[np.ndarray] = None
    covariances: Optional[np.ndarray] = None
    estimator: object = field(default=None, repr=False, compare=False)


def kmeans(X, p: ClusterParams = ClusterParams()) -> ClusterModel:
    est = KMeans(n_clusters=p.n_clusters, n_init=p.n_init, max_iter=p.max_iter,
                 tol=p.tolerance, random_state=p.seed).fit(X)
    return ClusterModel("kmeans", est.labels_, est.cluster_centers_, p.n_clusters,
                        inertia=est.inertia_, estimator=est)


def dbscan(X, p: ClusterParams = ClusterParams(method="dbscan")) -> ClusterModel:
    est = DBSCAN(eps=p.eps, min_samples=p.min_samples).fit(X)
    X = np.asarray(X, dtype=float)
    centers = np.array([X[est.labels_ == j].mean(axis=0) for j in range(est.n_clusters_)])
    centers = centers.reshape(est.n_clusters_, X.shape[1])
    return ClusterModel("dbscan", est.labels_, centers, est.n_clusters_, estimator=est)


def fit_bgm(X, p: ClusterParams = ClusterParams(method="bgm")) -> ClusterModel:
    est = BayesianGaussianMixture(n_components=p.n_clusters, max_iter=p.max_iter,
                                  tol=p.tolerance, random_state=p.seed).fit(X)
    return ClusterModel("bgm", est.labels_, est.means_, est.n_effective_components_,
                        weights=est.weights_, covariances=est.covariances_, estimator=est)


_FITTERS = {"kmeans": kmeans, "dbscan": dbscan, "bgm": fit_bgm}


def fit_clusters(X, p: ClusterParams) -> ClusterModel:
    return _FITTERS[p.method](X, p)


def extract_centroids(m: ClusterModel) -> np.ndarray:
    """Cluster representatives in reduced space.

    K-means centroids as fitted; every BGM component mean ordered by
    descending weight (stable on ties); DBSCAN per-cluster means, noise
    excluded.
    """
    centers = np.asarray(m.centers, dtype=float)
    if m.method == "bgm":
        order = np.argsort(-np.asarray(m.weights), kind="stable")
        centers = centers[order]
    if len(centers) == 0:
        raise EmptyResultError(f"{m.method} model has no clusters")
    return centers
