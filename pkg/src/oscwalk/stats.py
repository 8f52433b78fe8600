"""Empirical distributions, Kolmogorov-Smirnov distances, DKW bands, cell z-scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "ks_distance",
    "ks_distance_discrete",
    "dkw_band",
    "cell_test",
    "total_variation",
]

MAX_CONFIDENCE = 1 - 1e-15


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample; build with :meth:`from_sample`."""

    values: np.ndarray

    @classmethod
    def from_sample(cls, sample) -> "EmpiricalDistribution":
        v = np.sort(np.asarray(sample, dtype=float).ravel())
        v.setflags(write=False)
        return cls(v)

    @property
    def n(self) -> int:
        return len(self.values)

    def cdf(self, x) -> np.ndarray:
        """Right-continuous step CDF."""
        return np.searchsorted(self.values, x, side="right") / self.n

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([np.arange(self.n), self.values]),
                   delimiter=",", header="path_id,value", comments="", fmt=["%d", "%.17g"])


def ks_distance(emp: EmpiricalDistribution, cdf) -> float:
    """``sup_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|)`` over the sorted sample.

    ``cdf`` must accept an array.
    """
    n = emp.n
    if n < 1:
        raise ValueError("empty sample")
    F = np.asarray(cdf(emp.values), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))


def ks_distance_discrete(sites, probs, cdf) -> float:
    """KS distance between a finitely supported law and a continuous CDF.

    Same statistic as :func:`ks_distance` in the limit of an infinite sample:
    both sides of every jump are compared.
    """
    order = np.argsort(sites)
    x = np.asarray(sites, dtype=float)[order]
    p = np.asarray(probs, dtype=float)[order]
    p = p / p.sum()
    upper = np.cumsum(p)
    lower = upper - p
    F = np.asarray(cdf(x), dtype=float)
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(lower - F))))


def dkw_band(n: int, confidence: float = 0.99) -> float:
    """``eps = sqrt(ln(2 / (1 - confidence)) / (2 n))``.

    Confidence is capped just below 1 so the band stays finite.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    confidence = min(confidence, MAX_CONFIDENCE)
    return float(np.sqrt(np.log(2 / (1 - confidence)) / (2 * n)))


def cell_test(observed: int, trials: int, p: float) -> float:
    """Binomial z-score; for ``p`` in {0, 1} returns 0 on an exact match, else inf."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    expected = trials * p
    if p in (0.0, 1.0):
        return 0.0 if observed == expected else float("inf")
    return float((observed - expected) / np.sqrt(trials * p * (1 - p)))


def total_variation(p: dict, q: dict) -> float:
    """``(1/2) sum |p(x) - q(x)|`` over the union of supports."""
    keys = set(p) | set(q)
    return 0.5 * float(sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))
