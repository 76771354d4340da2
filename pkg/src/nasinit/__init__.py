"""Data-driven population initialization for cell-based architecture search.

Sample a cell search space, encode and cluster the samples, and seed Aging
Evolution with the architectures nearest to the cluster centroids.
"""
from .benchmark import (
    BenchmarkRecord,
    EvalResult,
    TabularBenchmark,
    load_dataset,
    query,
    sample_records,
    synthetic_benchmark,
)
from .clustering import (
    DBSCAN,
    BayesianGaussianMixture,
    ClusterModel,
    ClusterParams,
    KMeans,
    calinski_harabasz_score,
    davies_bouldin_score,
    extract_centroids,
    silhouette_score,
)
from .encoding import ArchitectureEncoder, encode_binary, encode_original
from .reduction import PCA, TruncatedSVD
from .search import (
    ClusteringRecipe,
    SearchConfig,
    aging_evolution,
    centroid_init,
    random_search,
    run_experiment,
)
from .search_space import (
    CellArchitecture,
    OperationLabel,
    SpaceConstraints,
    canonical_key,
    is_valid,
    mutate,
    prune,
    random_architecture,
)
from .stats import summarize, wilcoxon_rank_sum

__version__ = "0.1.0"

__all__ = [
    "ArchitectureEncoder", "BayesianGaussianMixture", "BenchmarkRecord", "CellArchitecture",
    "ClusterModel", "ClusterParams", "ClusteringRecipe", "DBSCAN", "EvalResult", "KMeans",
    "OperationLabel", "PCA", "SearchConfig", "SpaceConstraints", "TabularBenchmark",
    "TruncatedSVD", "aging_evolution", "calinski_harabasz_score", "canonical_key",
    "centroid_init", "davies_bouldin_score", "encode_binary", "encode_original",
    "extract_centroids", "is_valid", "load_dataset", "mutate", "prune", "query",
    "random_architecture", "random_search", "run_experiment", "sample_records",
    "silhouette_score", "summarize", "synthetic_benchmark", "wilcoxon_rank_sum",
]
