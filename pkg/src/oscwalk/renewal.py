"""Renewal potentials of ladder-height walks and the constants built on them."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import OutOfTable
from .fluctuation import LadderLaw, ladder_law
from .lattice import LatticePmf

__all__ = [
    "RenewalTable",
    "LimitConstants",
    "GrowthReport",
    "potential",
    "renewal_function",
    "limit_constants",
    "check_growth",
    "DEFAULT_CONVENTION",
]

Convention = Literal["closed", "half_open"]

# h(x) = U[0, x - 1]; the only reading consistent with the exact first-passage
# asymptotics and with Wald's identity for the crossing chain
DEFAULT_CONVENTION: Convention = "half_open"


@dataclass(frozen=True)
class RenewalTable:
    """Potential ``U(t)`` of a ladder-height walk for ``t = 0..x_max``.

    For a descending ladder law the table is indexed by ``|t|``, so that
    ``values[t]`` is ``U'_-(-t)``.  ``h`` holds the prefix sums used by
    :func:`renewal_function`.
    """

    values: np.ndarray
    ladder: LadderLaw
    convention: Convention = DEFAULT_CONVENTION

    @property
    def x_max(self) -> int:
        return len(self.values) - 1

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.values)

    def with_convention(self, convention: Convention) -> "RenewalTable":
        return replace(self, convention=convention)

    def h(self, x) -> np.ndarray:
        """Vectorized :func:`renewal_function`."""
        x = np.asarray(x)
        if np.any(x > self.x_max):
            raise OutOfTable(f"x={int(np.max(x))} beyond x_max={self.x_max}")
        cum = np.concatenate([[0.0], self.cumulative])
        idx = x + 1 if self.convention == "closed" else x
        return np.where(x < 0, 0.0, cum[np.clip(idx, 0, None)])

    def to_csv(self, path) -> None:
        h = self.h(np.arange(self.x_max + 1))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "U", "h"])
            for t, (u, hv) in enumerate(zip(self.values, h)):
                w.writerow([t, repr(float(u)), repr(float(hv))])


def potential(ladder: LadderLaw, x_max: int = 256, convention: Convention = DEFAULT_CONVENTION) -> RenewalTable:
    """Renewal potential ``U = sum_n mu_+^{*n}`` by the renewal recursion.

    ``U(t) = 1{t = 0} + sum_s mu_+(s) U(t - s)`` for ``t`` ascending.
    """
    heights = ladder.magnitudes
    U = np.zeros(x_max + 1)
    steps = heights.support
    probs = heights.probs
    for t in range(x_max + 1):
        acc = 1.0 if t == 0 else 0.0
        m = steps <= t
        acc += float(np.dot(probs[m], U[t - steps[m]]))
        U[t] = acc
    return RenewalTable(U, ladder, convention)


def renewal_function(table: RenewalTable, x: int) -> float:
    """``h(x) = U[0, x]`` (closed) or ``U[0, x - 1]`` (half-open); 0 for ``x < 0``.

    For a descending table this is ``h'_d(x) = U'_-[-x, 0]`` (resp. ``[-(x-1), 0]``).
    """
    return float(table.h(x))


@dataclass(frozen=True)
class LimitConstants:
    c: float
    c_prime: float
    mean_ascending: float
    mean_descending: float
    sigma: float
    sigma_prime: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def limit_constants(
    mu: LatticePmf,
    mu_prime: LatticePmf,
    tol: float = 1e-4,
    ladders: tuple[LadderLaw, LadderLaw] | None = None,
) -> LimitConstants:
    """``c = E[S_l1] / (sigma sqrt(2 pi))`` and ``c' = E[-S'_l'1] / (sigma' sqrt(2 pi))``."""
    if ladders is None:
        up = ladder_law(mu, "ascending", tol)
        down = ladder_law(mu_prime, "descending", tol)
    else:
        up, down = ladders
    sigma, sigma_p = np.sqrt(mu.variance), np.sqrt(mu_prime.variance)
    root = np.sqrt(2 * np.pi)
    return LimitConstants(
        c=up.mean_abs_height / (sigma * root),
        c_prime=down.mean_abs_height / (sigma_p * root),
        mean_ascending=up.mean_abs_height,
        mean_descending=down.mean_abs_height,
        sigma=float(sigma),
        sigma_prime=float(sigma_p),
    )


@dataclass
class GrowthReport:
    monotone: bool
    ratio_at_max: float
    expected_ratio: float
    relative_error: float
    ok: bool


def check_growth(table: RenewalTable, rtol: float = 0.05) -> GrowthReport:
    """``h`` is non-decreasing and ``h(x) / x`` approaches ``1 / E[height]``."""
    if table.x_max < 16:
        raise ValueError("need x_max >= 16")
    xs = np.arange(table.x_max + 1)
    h = table.h(xs)
    monotone = bool(np.all(np.diff(h) >= 0) and np.all(table.values >= 0))
    ratio = float(h[-1] / table.x_max)
    expected = 1.0 / table.ladder.mean_abs_height
    err = abs(ratio - expected) / expected
    return GrowthReport(monotone, ratio, expected, err, monotone and err <= rtol)
