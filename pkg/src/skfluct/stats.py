"""Empirical-distribution comparisons and moment tables.

Distances between replica samples: two-sample Kolmogorov-Smirnov via the
merge scan over both sorted samples, and Wasserstein-1 as the L1 distance
between the piecewise-constant empirical quantile functions (exact for
empirical measures, equal sizes or not). Moments carry bootstrap standard
errors with per-call seeded resampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted finite samples plus a label for reports."""

    samples: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.samples, dtype=np.float64).ravel()
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        values = np.sort(values)
        values.flags.writeable = False
        object.__setattr__(self, "samples", values)

    def __len__(self) -> int:
        return int(self.samples.size)

    def _require_nonempty(self) -> None:
        if len(self) == 0:
            raise EmptySample(f"empty sample {self.label!r}")


@dataclass
class MomentTable:
    """Raw moments by order with standard errors (0 for exact tables)."""

    orders: list[int]
    values: list[float]
    std_errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.std_errors:
            self.std_errors = [0.0] * len(self.values)
        if not (len(self.orders) == len(self.values) == len(self.std_errors)):
            raise ValueError("orders, values and std_errors must have equal length")
        if any(se < 0 for se in self.std_errors):
            raise ValueError("std_errors must be >= 0")

    def value(self, order: int) -> float:
        return self.values[self.orders.index(order)]

    def std_error(self, order: int) -> float:
        return self.std_errors[self.orders.index(order)]


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """sup_x |F_a(x) - F_b(x)| over the merged support."""
    a._require_nonempty()
    b._require_nonempty()
    support = np.concatenate([a.samples, b.samples])
    cdf_a = np.searchsorted(a.samples, support, side="right") / len(a)
    cdf_b = np.searchsorted(b.samples, support, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample rejection threshold c(alpha) sqrt((n+m)/(n m))."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def wasserstein1(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """L1 distance of the quantile functions, via the CDF integral.

    Both empirical CDFs are piecewise constant on the merged sorted support,
    so integrating |F_a - F_b| between consecutive support points is exact
    and equals the quantile-function L1 distance for any sample sizes.
    """
    a._require_nonempty()
    b._require_nonempty()
    support = np.sort(np.concatenate([a.samples, b.samples]))
    deltas = np.diff(support)
    cdf_a = np.searchsorted(a.samples, support[:-1], side="right") / len(a)
    cdf_b = np.searchsorted(b.samples, support[:-1], side="right") / len(b)
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def moment_table(
    a: EmpiricalDistribution,
    max_order: int,
    bootstrap_reps: int = 1000,
    seed: int = 0,
) -> MomentTable:
    """Raw moments 1..max_order with bootstrap standard errors.

    Resampling is chunked so that large samples do not materialize a
    (reps x n) index matrix at once; deterministic in seed.
    """
    if max_order > 8:
        raise ValueError(f"moments are tabulated for orders <= 8, got {max_order}")
    a._require_nonempty()
    x = a.samples
    n = len(a)
    orders = list(range(1, max_order + 1))

    def raw_moments(v: np.ndarray) -> np.ndarray:
        out = np.empty(max_order)
        acc = v.copy()
        for k in range(max_order):
            out[k] = acc.mean()
            if k + 1 < max_order:
                acc *= v
        return out

    values = raw_moments(x)
    rng = np.random.default_rng(seed)
    rep_moments = np.empty((bootstrap_reps, max_order))
    for r in range(bootstrap_reps):
        rep_moments[r] = raw_moments(x[rng.integers(0, n, size=n)])
    std_errors = rep_moments.std(axis=0, ddof=1) if bootstrap_reps > 1 else np.zeros(max_order)
    return MomentTable(
        orders=orders,
        values=[float(v) for v in values],
        std_errors=[float(s) for s in std_errors],
    )


def spearman_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    from scipy import stats as sps

    rho, _ = sps.spearmanr(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(rho)
