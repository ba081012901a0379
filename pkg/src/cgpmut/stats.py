"""Mann-Whitney U test and per-cell run summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

EXACT_MAX_N = 8

NO_MARKER = ""
DAGGER = "dagger"
DOUBLE_DAGGER = "double_dagger"
MARKER_SYMBOLS = {NO_MARKER: "", DAGGER: "†", DOUBLE_DAGGER: "‡"}

METRICS = ("generations", "best_fitness")


class MannWhitney(NamedTuple):
    u: float
    p: float


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties get the mean of the ranks they span."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_sizes(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts


def _u_statistics(a: np.ndarray, b: np.ndarray):
    ranks = midranks(np.concatenate([a, b]))
    na = len(a)
    u_a = ranks[:na].sum() - na * (na + 1) / 2.0
    return u_a, na * len(b) - u_a, ranks


def normal_p(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided p from the normal approximation with tie and continuity correction."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    n = na + nb
    u_a, _, _ = _u_statistics(a, b)
    ties = _tie_sizes(np.concatenate([a, b]))
    tie_term = float(np.sum(ties ** 3 - ties)) / (n * (n - 1)) if n > 1 else 0.0
    var = na * nb / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    z = (abs(u_a - na * nb / 2.0) - 0.5) / math.sqrt(var)
    if z <= 0.0:
        return 1.0
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def exact_p(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided p from the exact permutation distribution of the rank sum.

    Counts every way of assigning the pooled (mid)ranks to the smaller sample;
    ties are handled because the pooled ranks are used as they are.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) > len(b):
        a, b = b, a
    k = len(a)
    ranks = midranks(np.concatenate([a, b]))
    doubled = np.rint(2 * ranks).astype(np.int64)
    observed = int(doubled[:k].sum())
    top = int(np.sort(doubled)[-k:].sum()) if k else 0
    # counts[j, s]: subsets of size j with doubled-rank sum s
    counts = np.zeros((k + 1, top + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for r in doubled:
        for j in range(k, 0, -1):
            counts[j, r:] += counts[j - 1, :top + 1 - r]
    dist = counts[k]
    total = dist.sum()
    lower = dist[:observed + 1].sum() / total
    upper = dist[observed:].sum() / total
    return float(min(1.0, 2.0 * min(lower, upper)))


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float],
                   method: str = "auto") -> MannWhitney:
    """Smaller U statistic and two-sided p-value.

    ``method="auto"`` enumerates exactly when the smaller sample has at most
    eight values, otherwise uses the normal approximation.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    u_a, u_b, _ = _u_statistics(a, b)
    if method == "auto":
        method = "exact" if min(a.size, b.size) <= EXACT_MAX_N else "normal"
    if method == "exact":
        p = exact_p(a, b)
    elif method == "normal":
        p = normal_p(a, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    return MannWhitney(float(min(u_a, u_b)), p)


def marker_for(p: float | None) -> str:
    if p is None or math.isnan(p):
        return NO_MARKER
    if p < 0.01:
        return DOUBLE_DAGGER
    if p < 0.05:
        return DAGGER
    return NO_MARKER


@dataclass(frozen=True)
class GridCellSummary:
    insertion_rate: float
    deletion_rate: float
    n_runs: int
    mean: float
    median: float
    std_dev: float
    u_statistic: float | None
    p_value: float | None
    marker: str
    excluded: int = 0

    def formatted_mean(self, digits: int | None = None) -> str:
        if math.isnan(self.mean):
            return "n/a"
        text = f"{self.mean:.{digits}f}" if digits is not None else f"{self.mean:g}"
        return text + MARKER_SYMBOLS[self.marker]


def metric_values(records, metric: str) -> tuple[np.ndarray, int]:
    """Extract the metric; unsuccessful runs are dropped for ``generations``."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    if metric == "generations":
        kept = [r.generations for r in records if r.success]
        return np.asarray(kept, dtype=np.float64), len(records) - len(kept)
    return np.asarray([r.best_fitness for r in records], dtype=np.float64), 0


def summarize_cell(records, baseline, metric: str, insertion_rate: float = 0.0,
                   deletion_rate: float = 0.0, is_baseline: bool = False) -> GridCellSummary:
    """Mean/median/std of ``metric`` plus a Mann-Whitney comparison to ``baseline``.

    ``records`` are any objects with ``generations``, ``best_fitness`` and
    ``success`` attributes. The baseline cell itself (``is_baseline``) carries
    no test.
    """
    if len(records) == 0:
        raise ValueError("cannot summarize an empty cell")
    values, excluded = metric_values(records, metric)
    if values.size:
        mean, median = float(values.mean()), float(np.median(values))
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    else:
        mean = median = std = float("nan")
    u = p = None
    if not is_baseline:
        base_values, _ = metric_values(baseline, metric)
        if values.size and base_values.size:
            u, p = mann_whitney_u(values, base_values)
    return GridCellSummary(insertion_rate, deletion_rate, len(records) - excluded, mean,
                           median, std, u, p, marker_for(p), excluded)
