"""Descriptive statistics and the Wilcoxon rank-sum (Mann-Whitney U) test."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

__all__ = ["SampleSummary", "TestResult", "summarize", "midranks", "wilcoxon_rank_sum",
           "EXACT_MAX_TOTAL"]

EXACT_MAX_TOTAL = 12


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    median: float
    min: float
    max: float
    std: float

    def as_dict(self) -> dict:
        return {"mean": self.mean, "median": self.median, "min": self.min,
                "max": self.max, "std": self.std}


@dataclass(frozen=True)
class TestResult:
    statistic: float  # U of the first sample
    p_value: float
    method: str  # "exact" or "normal"
    two_sided: bool
    alternative: str = "two-sided"

    __test__ = False  # not a pytest class


def summarize(xs) -> SampleSummary:
    """Mean, median, extrema and sample standard deviation (ddof=1)."""
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size < 2:
        raise ParameterError(f"need at least 2 values to summarize, got {xs.size}")
    return SampleSummary(int(xs.size), float(xs.mean()), float(np.median(xs)),
                         float(xs.min()), float(xs.max()), float(xs.std(ddof=1)))


def midranks(values) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_p(u, n, m, alternative):
    total = n + m
    offset = n * (n + 1) / 2.0
    dist = [sum(c) - offset for c in itertools.combinations(range(1, total + 1), n)]
    count = len(dist)
    le = sum(1 for d in dist if d <= u + 1e-9) / count
    ge = sum(1 for d in dist if d >= u - 1e-9) / count
    if alternative == "less":
        return le
    if alternative == "greater":
        return ge
    return min(1.0, 2.0 * min(le, ge))


def _normal_p(u, n, m, ranks, alternative):
    N = n + m
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (N * (N - 1)) if N > 1 else 0.0
    var = n * m / 12.0 * ((N + 1) - tie_term)
    if var <= 0:
        return 1.0
    sd = math.sqrt(var)
    mu = n * m / 2.0
    if alternative == "greater":
        z = (u - mu - 0.5) / sd
        return 0.5 * math.erfc(z / math.sqrt(2))
    if alternative == "less":
        z = (u - mu + 0.5) / sd
        return 0.5 * math.erfc(-z / math.sqrt(2))
    z = max(abs(u - mu) - 0.5, 0.0) / sd
    return min(1.0, math.erfc(z / math.sqrt(2)))


def wilcoxon_rank_sum(a, b, two_sided: bool = True, alternative: str = "greater",
                      method: str = "auto") -> TestResult:
    """Wilcoxon rank-sum test of sample ``a`` against ``b``.

    ``method="auto"`` enumerates the exact null distribution when
    ``len(a) + len(b) <= 12`` and there are no ties; otherwise it uses the
    normal approximation with tie-corrected variance and a 0.5 continuity
    correction. When ``two_sided`` is false, ``alternative`` says whether
    ``a`` is expected to be "greater" or "less" than ``b``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("both samples must be non-empty")
    if two_sided:
        alternative = "two-sided"
    elif alternative not in ("greater", "less"):
        raise ParameterError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    n, m = a.size, b.size
    ranks = midranks(np.concatenate([a, b]))
    u = float(ranks[:n].sum() - n * (n + 1) / 2.0)
    has_ties = len(np.unique(ranks)) < n + m

    if method == "auto":
        method = "exact" if (n + m <= EXACT_MAX_TOTAL and not has_ties) else "normal"
    if method == "exact":
        if has_ties:
            raise ParameterError("exact method requires tie-free samples")
        p = _exact_p(u, n, m, alternative)
    elif method == "normal":
        p = _normal_p(u, n, m, ranks, alternative)
    else:
        raise ParameterError(f"method must be 'auto', 'exact' or 'normal', got {method!r}")
    return TestResult(u, float(min(max(p, 0.0), 1.0)), method, two_sided, alternative)
