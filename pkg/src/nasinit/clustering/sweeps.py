"""Calibration sweeps over reduction size and cluster count.

A failing cell does not abort a sweep: its metrics are NaN and ``error``
carries the message.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..exceptions import NasInitError
from ..reduction import make_reducer
from .base import ClusterParams, fit_clusters
from .metrics import evaluate

__all__ = ["SweepRow", "SWEEP_COLUMNS", "sweep_components", "sweep_cluster_counts"]

LOG = logging.getLogger(__name__)

SWEEP_COLUMNS = ("method", "encoding", "n_components", "n_clusters",
                 "silhouette", "calinski_harabasz", "davies_bouldin")


@dataclass(frozen=True)
class SweepRow:
    method: str
    encoding: str
    n_components: int
    n_clusters: int
    silhouette: float = math.nan
    calinski_harabasz: float = math.nan
    davies_bouldin: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def as_dict(self) -> dict:
        return asdict(self)


def _cell(method, encoding, n_components, Z, params: ClusterParams) -> SweepRow:
    try:
        model = fit_clusters(Z, params)
        report = evaluate(Z, model.labels)
    except (NasInitError, ValueError, np.linalg.LinAlgError) as exc:
        LOG.warning("sweep cell %s/%s/%d/k=%d failed: %s",
                    method, encoding, n_components, params.n_clusters, exc)
        return SweepRow(method, encoding, n_components, params.n_clusters, error=str(exc))
    return SweepRow(method, encoding, n_components, params.n_clusters, **report.as_dict())


def sweep_components(X, methods: Sequence[str] = ("pca", "tsvd"),
                     component_counts: Iterable[int] = range(2, 11),
                     k_fixed: int = 10, encoding: str = "original",
                     params: ClusterParams = ClusterParams()) -> list:
    """Reduce ``X`` with every (method, component count) and cluster the
    result into ``k_fixed`` groups."""
    params = params.with_(n_clusters=k_fixed)
    rows = []
    for method in methods:
        for n_components in component_counts:
            try:
                Z = make_reducer(method, int(n_components)).fit_transform(X)
            except NasInitError as exc:
                rows.append(SweepRow(method, encoding, int(n_components), k_fixed, error=str(exc)))
                continue
            rows.append(_cell(method, encoding, int(n_components), Z, params))
    return rows


def sweep_cluster_counts(Z, k_list: Iterable[int], encoding: str = "original",
                         method: str = "tsvd",
                         params: ClusterParams = ClusterParams()) -> list:
    """Cluster an already reduced matrix ``Z`` for every k in ``k_list``."""
    Z = np.asarray(Z, dtype=float)
    return [_cell(method, encoding, Z.shape[1], Z, params.with_(n_clusters=int(k)))
            for k in k_list]
