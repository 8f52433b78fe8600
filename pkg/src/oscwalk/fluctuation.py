"""Exact first-passage computations for the two one-sided walks.

The walk on the negative side starts at ``-x`` (``x >= 1``), moves with
steps from ``mu`` and is stopped the first time it reaches ``{0, 1, ...}``.
The walk on the positive side starts at ``+x``, moves with steps from
``mu'`` and is stopped the first time it reaches ``{..., -1, 0}``.  The
positive side is the mirror image of the negative side run with the
reflected step law, so a single dynamic-programming engine serves both.

Internally a surviving walk is tracked by its *depth* ``d >= 0`` below the
barrier: site ``-1 - d`` on the negative side, ``1 + d`` on the positive
side.  The survival region is unbounded, so the depth window is trimmed
adaptively; whatever is trimmed is booked as truncated mass.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import SlowConvergence, TruncationBudgetExceeded
from .lattice import LatticePmf, make_pmf, reflect

__all__ = [
    "KilledWalkTable",
    "LadderLaw",
    "build_killed_table",
    "killed_dp",
    "survival_table",
    "entrance_law",
    "bridge_probability",
    "ladder_law",
    "wiener_hopf_ascending",
    "verify_upper_bounds",
    "UpperBoundReport",
]

Side = Literal["negative", "positive"]

DEFAULT_DEPTH_TOL = 1e-13
DEFAULT_MAX_DEPTH = 1 << 20


def _engine_pmf(pmf: LatticePmf, side: Side) -> LatticePmf:
    if side == "negative":
        return pmf
    if side == "positive":
        return reflect(pmf)
    raise ValueError(f"side must be 'negative' or 'positive', got {side!r}")


@dataclass
class DPResult:
    survival: np.ndarray  # (S, N+1)
    absorbed: np.ndarray  # (S, N+1, W): overshoot w = 0..W-1
    truncated: np.ndarray  # (S, N+1), cumulative
    alive: list | None  # alive[n] -> (S, L_n) when kept


def killed_dp(
    pmf: LatticePmf,
    starts,
    horizon: int,
    depth_tol: float = DEFAULT_DEPTH_TOL,
    keep_alive: bool = False,
    max_depth: int = DEFAULT_MAX_DEPTH,
    on_step: Callable[[int, np.ndarray], None] | None = None,
) -> DPResult:
    """Negative-side killed walk DP for several starting depths at once.

    ``starts`` are the values ``x >= 1`` (start site ``-x``).  Row ``i`` of
    every output refers to ``starts[i]``.  ``on_step(n, alive)`` is called
    after each step with the ``(S, L)`` alive matrix (depth-indexed).
    """
    starts = np.atleast_1d(np.asarray(starts, dtype=np.int64))
    if np.any(starts < 1):
        raise ValueError("start values x must be >= 1")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    S = len(starts)
    steps = pmf.support.tolist()
    probs = pmf.probs.tolist()
    down = max(0, -pmf.min_site)
    W = max(1, pmf.max_site)

    L = int(starts.max())
    A = np.zeros((S, L))
    A[np.arange(S), starts - 1] = 1.0

    survival = np.empty((S, horizon + 1))
    absorbed = np.zeros((S, horizon + 1, W))
    truncated = np.zeros((S, horizon + 1))
    survival[:, 0] = 1.0
    alive = [A.copy()] if keep_alive else None
    lost = np.zeros(S)

    for n in range(1, horizon + 1):
        new = np.zeros((S, L + down))
        ab = absorbed[:, n, :]
        for s, p in zip(steps, probs):
            if s <= 0:
                new[:, -s : -s + L] += p * A
            else:
                if s < L:
                    new[:, : L - s] += p * A[:, s:]
                k = min(s, L)
                ab[:, s - k : s] += p * A[:, :k][:, ::-1]
        # trim the deep end while every row's dropped tail stays within budget
        tails = np.cumsum(new[:, ::-1], axis=1)[:, ::-1]
        ok = np.all(tails <= depth_tol, axis=0)
        if ok.any():
            # tails shrink with depth, so ``ok`` is False...False True...True
            D = max(int(np.argmax(ok)), 1)
            if D < new.shape[1]:
                lost += tails[:, D]
                new = new[:, :D]
        if new.shape[1] > max_depth:
            raise TruncationBudgetExceeded(
                f"depth window {new.shape[1]} exceeds max_depth={max_depth} at step {n}"
            )
        A = new
        L = A.shape[1]
        survival[:, n] = A.sum(axis=1)
        truncated[:, n] = lost
        if keep_alive:
            alive.append(A.copy())
        if on_step is not None:
            on_step(n, A)
    return DPResult(survival, absorbed, truncated, alive)


@dataclass
class KilledWalkTable:
    """Sub-probability laws of one killed walk up to a horizon.

    ``alive[n][d]`` is the probability of having survived ``n`` steps and
    sitting at depth ``d``; ``absorbed[n, w]`` the probability of exiting at
    exactly step ``n`` with overshoot ``w``.
    """

    side: Side
    start: int
    horizon: int
    pmf: LatticePmf
    survival: np.ndarray
    absorbed: np.ndarray
    truncated: np.ndarray
    alive: list | None = field(repr=False, default=None)

    @property
    def truncated_mass(self) -> float:
        return float(self.truncated[-1])

    def alive_site(self, depth):
        depth = np.asarray(depth)
        return -1 - depth if self.side == "negative" else 1 + depth

    def exit_site(self, w):
        w = np.asarray(w)
        return w if self.side == "negative" else -w

    def alive_law(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Sites and probabilities of ``P[tau > n, position = site]``."""
        if self.alive is None:
            raise ValueError("table was built without keep_alive")
        row = self.alive[n]
        d = np.nonzero(row)[0]
        return self.alive_site(d), row[d]

    def mass_balance(self) -> np.ndarray:
        """``alive + absorbed so far + truncated`` for each n; should be 1."""
        return self.survival + np.cumsum(self.absorbed.sum(axis=1)) + self.truncated

    def to_csv(self, alive_path, absorbed_path) -> None:
        with open(alive_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "y", "alive_prob"])
            if self.alive is not None:
                for n, row in enumerate(self.alive):
                    for d in np.nonzero(row)[0]:
                        w.writerow([n, int(self.alive_site(d)), repr(float(row[d]))])
        with open(absorbed_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "w", "absorbed_prob"])
            for n in range(1, self.horizon + 1):
                for k in np.nonzero(self.absorbed[n])[0]:
                    w.writerow([n, int(self.exit_site(k)), repr(float(self.absorbed[n, k]))])


def build_killed_table(
    pmf: LatticePmf,
    x: int,
    side: Side,
    horizon: int,
    depth_tol: float = DEFAULT_DEPTH_TOL,
    keep_alive: bool = True,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> KilledWalkTable:
    """Killed-walk table for start ``-x`` (negative side) or ``+x`` (positive side).

    Raises
    ------
    TruncationBudgetExceeded
        If keeping the per-step trimmed mass under ``depth_tol`` would need a
        window deeper than ``max_depth``.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 < depth_tol <= 1e-6:
        raise ValueError("depth_tol must lie in (0, 1e-6]")
    res = killed_dp(_engine_pmf(pmf, side), [x], horizon, depth_tol, keep_alive, max_depth)
    alive = [a[0] for a in res.alive] if keep_alive else None
    return KilledWalkTable(
        side, int(x), int(horizon), pmf, res.survival[0], res.absorbed[0], res.truncated[0], alive
    )


def survival_table(table: KilledWalkTable) -> np.ndarray:
    """``P[tau > n]`` for ``n = 0..N``."""
    return table.survival.copy()


def entrance_law(table: KilledWalkTable, n: int) -> dict[int, float]:
    """Exit site law at exact exit time ``n``: ``{site: P[tau = n, X_tau = site]}``."""
    if not 0 <= n <= table.horizon:
        raise IndexError(f"n={n} outside 0..{table.horizon}")
    row = table.absorbed[n]
    return {int(table.exit_site(w)): float(row[w]) for w in np.nonzero(row)[0]}


def bridge_probability(table: KilledWalkTable, n: int, y: int) -> float:
    """``P[tau > n, position at n = -y]`` (negative side) or ``= +y`` (positive side)."""
    if table.alive is None:
        raise ValueError("table was built without keep_alive")
    if y < 1:
        return 0.0
    row = table.alive[n]
    d = y - 1
    return float(row[d]) if d < len(row) else 0.0


# ---------------------------------------------------------------------------
# ladder laws


@dataclass(frozen=True)
class LadderLaw:
    """Law of the first strict ladder height, with ladder-epoch tail.

    ``height_pmf`` lives on ``{1, 2, ...}`` for an ascending law and on
    ``{..., -2, -1}`` for a descending one.
    """

    direction: Literal["ascending", "descending"]
    height_pmf: LatticePmf
    epoch_tail: np.ndarray
    mean_height: float
    residual_mass: float
    method: str = "wiener-hopf"

    @property
    def magnitudes(self) -> LatticePmf:
        """The law of ``|height|`` (support on ``{1, 2, ...}``)."""
        return self.height_pmf if self.direction == "ascending" else reflect(self.height_pmf)

    @property
    def mean_abs_height(self) -> float:
        return abs(self.mean_height)


def wiener_hopf_ascending(pmf: LatticePmf, root_tol: float = 1e-9) -> LatticePmf:
    """Strict ascending ladder-height law of a centered finite-support walk.

    With steps in ``[-a, b]``, ``z**a * (1 - phi(z))`` is a polynomial of
    degree ``a + b`` with a double root at 1 (the walk is centered).  After
    removing it, the ``b - 1`` roots outside the closed unit disk belong to
    the ascending factor:
    ``1 - E[z**H] = (1 - z) * prod(1 - z / rho)``.
    """
    a = max(0, -pmf.min_site)
    b = pmf.max_site
    if b < 1 or a < 1:
        raise ValueError("need both upward and downward steps for a centered walk")
    if b == 1:
        return make_pmf([(1, 1.0)])
    P = np.polynomial.polynomial
    coef = np.zeros(a + b + 1)
    coef[a] += 1.0
    coef[pmf.support + a] -= pmf.probs
    quot, rem = P.polydiv(coef, np.array([1.0, -2.0, 1.0]))
    if np.max(np.abs(rem)) > 1e-9:
        raise ValueError("step law is not centered (no double root at 1)")
    roots = P.polyroots(quot) if len(quot) > 1 else np.array([])
    mod = np.abs(roots)
    if np.any(np.abs(mod - 1.0) < root_tol):
        raise ValueError("characteristic roots on the unit circle: step law is periodic")
    outside = roots[mod > 1.0]
    if len(outside) != b - 1:
        raise ValueError(f"expected {b - 1} roots outside the unit disk, found {len(outside)}")
    fac = np.array([1.0 + 0j, -1.0])
    for rho in outside:
        fac = P.polymul(fac, np.array([1.0, -1.0 / rho]))
    heights = -fac[1:].real
    heights[np.abs(heights) < 1e-15] = 0.0
    if np.any(heights < 0):
        raise ArithmeticError("negative ladder probability from root factorization")
    return make_pmf([(k + 1, p) for k, p in enumerate(heights) if p > 0])


def _ladder_by_dp(pmf, tol, max_horizon, depth_tol, redistribute):
    # first strict ascent from 0 == exit from -1 into {0, 1, ...}, height = w + 1
    N = 256
    while True:
        res = killed_dp(pmf, [1], N, depth_tol)
        resid = float(res.survival[0, -1] + res.truncated[0, -1])
        if resid <= tol or N >= max_horizon:
            break
        N = min(4 * N, max_horizon)
    if resid > tol:
        raise SlowConvergence(
            f"ladder residual mass {resid:.3g} > tol={tol:g} at horizon {N}; "
            "the epoch tail decays like n**-0.5"
        )
    heights = res.absorbed[0].sum(axis=0)
    keep = np.nonzero(heights > 0)[0]
    probs = heights[keep]
    if redistribute:
        probs = probs / probs.sum()
    # without redistribution the container carries a sub-probability: the
    # missing mass is exactly the reported residual
    return LatticePmf(keep + 1, probs), res.survival[0], resid


def ladder_law(
    pmf: LatticePmf,
    side: Literal["ascending", "descending"] = "ascending",
    tol: float = 1e-4,
    method: Literal["wiener-hopf", "dp"] = "wiener-hopf",
    epoch_horizon: int = 1024,
    max_horizon: int = 1 << 16,
    depth_tol: float = DEFAULT_DEPTH_TOL,
    redistribute: bool = False,
) -> LadderLaw:
    """First strict ladder height law of the walk with steps ``pmf``.

    ``method="wiener-hopf"`` gives the height law exactly (to rounding) from
    the root factorization; the epoch tail ``P[l_1 > n]`` comes from the
    killed-walk DP up to ``epoch_horizon``.  ``method="dp"`` reads the height
    law off the DP itself and raises :class:`SlowConvergence` when the
    un-laddered mass is still above ``tol`` at ``max_horizon``; the DP height
    law is then conditional on ladder time ``<= horizon``.

    Raises
    ------
    SlowConvergence
        Only for ``method="dp"``.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    if abs(pmf.mean) > 1e-9:
        raise ValueError("ladder laws here require a centered step law")
    base = pmf if side == "ascending" else reflect(pmf)
    if method == "wiener-hopf":
        heights = wiener_hopf_ascending(base)
        tail = killed_dp(base, [1], epoch_horizon, depth_tol).survival[0]
        resid = abs(1.0 - float(np.sum(heights.probs)))
    elif method == "dp":
        heights, tail, resid = _ladder_by_dp(base, tol, max_horizon, depth_tol, redistribute)
    else:
        raise ValueError(f"unknown method {method!r}")
    if side == "descending":
        heights = reflect(heights)
    return LadderLaw(side, heights, tail, heights.mean, resid, method)


# ---------------------------------------------------------------------------
# upper-bound diagnostics


@dataclass
class UpperBoundReport:
    n: np.ndarray
    survival_stat: np.ndarray  # sup_x sqrt(n) P[tau(-x) > n] / (1 + x)
    exit_stat: np.ndarray  # sup_x n^1.5 P[tau(-x) = n] / (1 + x)
    bridge_stat: np.ndarray  # sup_{x,y} n^1.5 P[tau > n, end at -y] / ((1+x)(1+y))
    survival_rows: np.ndarray  # raw P[tau(-x) > n], rows x = 1..x_max
    exit_rows: np.ndarray  # raw P[tau(-x) = n]

    def variation(self, stat: str, lo: int, hi: int) -> float:
        """``(max - min) / max`` of a statistic over ``n`` in ``[lo, hi]``."""
        v = getattr(self, stat)[(self.n >= lo) & (self.n <= hi)]
        return float((v.max() - v.min()) / v.max())

    def sup(self, stat: str) -> float:
        return float(np.max(getattr(self, stat)[1:])) if len(self.n) > 1 else 0.0


def verify_upper_bounds(
    pmf: LatticePmf,
    x_max: int,
    N: int,
    side: Side = "negative",
    y_max: int | None = None,
    depth_tol: float = DEFAULT_DEPTH_TOL,
) -> UpperBoundReport:
    """Normalized survival, exit-time and bridge statistics for ``x <= x_max``."""
    y_max = x_max if y_max is None else y_max
    xs = np.arange(1, x_max + 1)
    n = np.arange(N + 1)
    bridge = np.zeros(N + 1)
    wx = (1.0 + xs)[:, None]
    wy = (1.0 + np.arange(1, y_max + 1))[None, :]

    def on_step(k, A):
        block = np.zeros((len(xs), y_max))
        m = min(y_max, A.shape[1])
        block[:, :m] = A[:, :m]
        bridge[k] = k**1.5 * np.max(block / (wx * wy))

    res = killed_dp(_engine_pmf(pmf, side), xs, N, depth_tol, on_step=on_step)
    surv = res.survival
    exits = res.absorbed.sum(axis=2)
    return UpperBoundReport(
        n=n,
        survival_stat=np.sqrt(n) * np.max(surv / wx, axis=0),
        exit_stat=n**1.5 * np.max(exits / wx, axis=0),
        bridge_stat=bridge,
        survival_rows=surv,
        exit_rows=exits,
    )
