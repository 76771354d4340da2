"""Search strategies over a tabular benchmark.

``aging_evolution`` follows the regularized evolution loop: a FIFO population
of size P, tournaments of S members drawn with replacement, one mutated child
per step, and removal of the oldest member. ``centroid_init`` turns cluster
centroids into a starting population, which is what distinguishes the
boosted variant (``bae``) from plain ``ae``.
"""
from __future__ import annotations

import hashlib
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .benchmark import TabularBenchmark, sample_records
from .clustering import ClusterParams, extract_centroids, fit_clusters
from .encoding import BUDGETS, ArchitectureEncoder
from .exceptions import MissingArchitectureError, MutationError, ParameterError, SearchAbortedError
from .reduction import make_reducer
from .search_space import MUTATION_POLICIES, CellArchitecture, is_valid, mutate

__all__ = [
    "STRATEGIES",
    "SearchConfig",
    "EvaluatedModel",
    "RunTrace",
    "ClusteringRecipe",
    "aging_evolution",
    "random_search",
    "centroid_init",
    "build_initial_population",
    "run_experiment",
    "derive_seed",
]

LOG = logging.getLogger(__name__)

STRATEGIES = ("rs", "ae", "bae")
SELECTION_METRICS = ("validation", "test")


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 27
    tournament_size: int = 10
    total_evaluations: int = 2000
    budget: int = 108
    selection_metric: str = "validation"
    mutation_policy: str = "both-steps"
    seed: int = 0
    resample_budget: int = 100

    def __post_init__(self):
        p, s, c = self.population_size, self.tournament_size, self.total_evaluations
        if not 1 <= s <= p <= c:
            raise ParameterError(
                f"need 1 <= tournament ({s}) <= population ({p}) <= evaluations ({c})")
        if self.budget not in BUDGETS:
            raise ParameterError(f"budget must be one of {BUDGETS}, got {self.budget!r}")
        if self.selection_metric not in SELECTION_METRICS:
            raise ParameterError(f"selection_metric must be one of {SELECTION_METRICS}")
        if self.mutation_policy not in MUTATION_POLICIES:
            raise ParameterError(f"mutation_policy must be one of {MUTATION_POLICIES}")
        if self.resample_budget < 1:
            raise ParameterError("resample_budget must be >= 1")


@dataclass(frozen=True)
class EvaluatedModel:
    arch: CellArchitecture
    fitness: float
    report_accuracy: float
    validation_accuracy: float
    index: int


@dataclass
class RunTrace:
    """Per-evaluation incumbent record of one run.

    The incumbent is the highest-fitness model evaluated so far (earliest on
    ties). ``incumbent_fitness`` is therefore nondecreasing; the reported test
    accuracy is too whenever selection is on test accuracy.
    """

    strategy: str
    seed: int
    incumbent_fitness: list = field(default_factory=list)
    incumbent_test: list = field(default_factory=list)
    incumbent_validation: list = field(default_factory=list)
    best: Optional[EvaluatedModel] = None
    history: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.incumbent_test)

    @property
    def final_test_accuracy(self) -> float:
        return self.incumbent_test[-1]

    def _record(self, model: EvaluatedModel):
        if self.best is None or model.fitness > self.best.fitness:
            self.best = model
        self.incumbent_fitness.append(self.best.fitness)
        self.incumbent_test.append(self.best.report_accuracy)
        self.incumbent_validation.append(self.best.validation_accuracy)
        self.history.append(model)


def derive_seed(master_seed: int, run_index: int) -> int:
    """63-bit per-run seed hashed from (master seed, run index)."""
    digest = hashlib.sha256(f"{master_seed}:{run_index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _evaluate(b: TabularBenchmark, cfg: SearchConfig, arch, trace: RunTrace, result=None):
    if result is None:
        result = b.query(arch, cfg.budget)
    fitness = result.validation_accuracy if cfg.selection_metric == "validation" \
        else result.test_accuracy
    model = EvaluatedModel(arch, fitness, result.test_accuracy, result.validation_accuracy,
                           len(trace.history))
    trace._record(model)
    return model


def aging_evolution(b: TabularBenchmark, cfg: SearchConfig,
                    init: Optional[Sequence[CellArchitecture]] = None,
                    callback: Optional[Callable] = None, strategy: str = "ae") -> RunTrace:
    """Run regularized (aging) evolution for ``cfg.total_evaluations`` evaluations.

    With ``init`` the first P evaluations are exactly those cells, in order.
    On a closed-world benchmark a child missing from the table, or a parent
    that admits no mutation, triggers a fresh tournament and mutation, up to
    ``cfg.resample_budget`` times per step before the run is aborted.

    ``callback(population, dead, child)`` is invoked after every step.
    """
    rng = np.random.default_rng(cfg.seed)
    P, S, C = cfg.population_size, cfg.tournament_size, cfg.total_evaluations
    if init is not None:
        init = list(init)
        if len(init) != P:
            raise ParameterError(f"initial population has {len(init)} cells, expected {P}")
        bad = [i for i, a in enumerate(init) if not is_valid(a, b.constraints)]
        if bad:
            raise ParameterError(f"initial population holds invalid cells at {bad}")

    trace = RunTrace(strategy, cfg.seed)
    population = deque()
    for i in range(P):
        arch = init[i] if init is not None else b.random_architecture(rng)
        population.append(_evaluate(b, cfg, arch, trace))

    while len(trace.history) < C:
        for _ in range(cfg.resample_budget):
            sample = [population[i] for i in rng.integers(0, P, size=S)]
            parent = max(sample, key=lambda m: (m.fitness, -m.index))
            try:
                child = mutate(parent.arch, rng, cfg.mutation_policy, b.constraints)
                result = b.query(child, cfg.budget)
            except (MissingArchitectureError, MutationError):
                continue
            break
        else:
            raise SearchAbortedError(
                f"seed {cfg.seed}: no admissible child after {cfg.resample_budget} attempts "
                f"at evaluation {len(trace.history)}")
        model = _evaluate(b, cfg, child, trace, result)
        population.append(model)
        dead = population.popleft()
        if callback is not None:
            callback(population, dead, model)
    return trace


def random_search(b: TabularBenchmark, cfg: SearchConfig) -> RunTrace:
    """``cfg.total_evaluations`` independent uniform draws."""
    rng = np.random.default_rng(cfg.seed)
    trace = RunTrace("rs", cfg.seed)
    for _ in range(cfg.total_evaluations):
        _evaluate(b, cfg, b.random_architecture(rng), trace)
    return trace


def centroid_init(samples: Sequence, reduced, centroids, return_indices: bool = False):
    """Map each centroid to its nearest not-yet-chosen sample.

    Centroids are served in order; distance ties go to the lower sample index.
    ``samples`` are benchmark records (``.arch``) or cells.
    """
    reduced = np.asarray(reduced, dtype=float)
    centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
    if len(samples) != len(reduced):
        raise ParameterError(f"{len(samples)} samples but {len(reduced)} reduced rows")
    if len(centroids) == 0 or centroids.size == 0:
        raise ParameterError("no centroids given")
    if len(centroids) > len(samples):
        raise ParameterError(f"{len(centroids)} centroids exceed the {len(samples)} samples")
    dist = cdist(centroids, reduced)
    taken = np.zeros(len(samples), dtype=bool)
    chosen = []
    for row in dist:
        for idx in np.argsort(row, kind="stable"):
            if not taken[idx]:
                taken[idx] = True
                chosen.append(int(idx))
                break
    archs = [getattr(samples[i], "arch", samples[i]) for i in chosen]
    return (archs, chosen) if return_indices else archs


@dataclass(frozen=True)
class ClusteringRecipe:
    """How the boosted initial population is derived (defaults: short
    encoding, 2-D truncated SVD, Bayesian mixture with 27 components)."""

    encoding: str = "original"
    reducer: str = "tsvd"
    n_components: int = 2
    params: ClusterParams = ClusterParams(method="bgm", n_clusters=27)
    n_samples: int = 10000

    def describe(self) -> dict:
        return {"encoding": self.encoding, "reducer": self.reducer,
                "n_components": self.n_components, "cluster": self.params.method,
                "k": self.params.n_clusters, "n_samples": self.n_samples,
                "cluster_seed": self.params.seed}


def build_initial_population(b: TabularBenchmark, recipe: ClusteringRecipe, seed: int = 0,
                             samples: Optional[Sequence] = None):
    """Sample, encode, reduce, cluster and map centroids back to cells.

    Returns ``(cells, details)`` where ``details`` holds the samples, the
    reduced matrix, the fitted cluster model and the chosen sample indices.
    """
    if samples is None:
        samples = sample_records(b, recipe.n_samples, np.random.default_rng(seed))
    X = ArchitectureEncoder(recipe.encoding).fit_transform(samples)
    Z = make_reducer(recipe.reducer, recipe.n_components).fit_transform(X)
    model = fit_clusters(Z, recipe.params)
    centroids = extract_centroids(model)
    cells, indices = centroid_init(samples, Z, centroids, return_indices=True)
    details = {"samples": samples, "reduced": Z, "model": model, "indices": indices,
               "centroids": centroids}
    return cells, details


def run_experiment(b: TabularBenchmark, cfg: SearchConfig, strategy: str, M: int = 100,
                   recipe: Optional[ClusteringRecipe] = None,
                   init: Optional[Sequence[CellArchitecture]] = None,
                   n_jobs: int = 1) -> list:
    """M independent runs of one strategy; run ``i`` uses
    ``derive_seed(cfg.seed, i)``. Results come back in run order whatever
    ``n_jobs`` is.

    For ``bae`` the initial population is built once (from ``recipe``
    unless ``init`` is given) and shared by all runs.
    """
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if M < 1:
        raise ParameterError(f"run count must be >= 1, got {M}")
    if strategy == "bae" and init is None:
        if recipe is None:
            raise ParameterError("bae needs a clustering recipe or an initial population")
        init, _ = build_initial_population(b, recipe, seed=cfg.seed)
    if strategy == "bae" and len(init) != cfg.population_size:
        raise ParameterError(
            f"initial population has {len(init)} cells, population size is {cfg.population_size}")

    def one(i):
        run_cfg = replace(cfg, seed=derive_seed(cfg.seed, i))
        if strategy == "rs":
            return random_search(b, run_cfg)
        return aging_evolution(b, run_cfg, init if strategy == "bae" else None,
                               strategy=strategy)

    def guarded(i):
        try:
            return one(i), None
        except Exception as exc:  # reported per run below
            return None, exc

    if n_jobs == 1:
        outcomes = [guarded(i) for i in range(M)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(guarded, range(M)))

    failures = [(i, derive_seed(cfg.seed, i), exc) for i, (_, exc) in enumerate(outcomes)
                if exc is not None]
    if failures:
        detail = "; ".join(f"run {i} (seed {s}): {e}" for i, s, e in failures)
        err = SearchAbortedError(f"{len(failures)}/{M} runs failed: {detail}")
        err.failures = failures
        err.traces = [t for t, _ in outcomes]
        raise err
    return [t for t, _ in outcomes]
