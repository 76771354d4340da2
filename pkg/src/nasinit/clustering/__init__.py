"""Clustering algorithms, validity indices and calibration sweeps."""
from .base import (
    METHODS,
    ClusterModel,
    ClusterParams,
    dbscan,
    extract_centroids,
    fit_bgm,
    fit_clusters,
    kmeans,
)
from .dbscan import DBSCAN
from .kmeans import KMeans, kmeans_plusplus
from .metrics import (
    MetricReport,
    calinski_harabasz_score,
    davies_bouldin_score,
    evaluate,
    silhouette_score,
)
from .mixture import BayesianGaussianMixture
from .sweeps import SWEEP_COLUMNS, SweepRow, sweep_cluster_counts, sweep_components

__all__ = [
    "METHODS", "ClusterModel", "ClusterParams", "dbscan", "extract_centroids", "fit_bgm",
    "fit_clusters", "kmeans", "DBSCAN", "KMeans", "kmeans_plusplus", "MetricReport",
    "calinski_harabasz_score", "davies_bouldin_score", "evaluate", "silhouette_score",
    "BayesianGaussianMixture", "SWEEP_COLUMNS", "SweepRow", "sweep_cluster_counts",
    "sweep_components",
]
