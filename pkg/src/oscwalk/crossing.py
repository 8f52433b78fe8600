"""The crossing chain: positions of the walk at its successive sign changes.

From ``x <= -1`` the walk runs with ``mu`` until it first reaches
``{0, 1, ...}``; from ``x >= 1`` it runs with ``mu'`` until it first reaches
``{..., -1, 0}``; from ``0`` it makes one step with ``alpha mu + (1 - alpha) mu'``.
The kernel is assembled from ladder-height laws and their potentials:

    C(x, y) = sum_{t=0}^{-x-1} mu_+(y - x - t) U_+(t)          x <= -1, y >= 0
    C(0, y) = alpha mu(y) + (1 - alpha) mu'(y)
    C(x, y) = sum_{t=-x+1}^{0} mu'_-(y - x - t) U'_-(t)        x >= 1, y <= 0
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import DegenerateMeasure, NoConvergence, WindowTooSmall
from .fluctuation import LadderLaw, ladder_law
from .lattice import LatticePmf, mixture
from .renewal import (
    DEFAULT_CONVENTION,
    LimitConstants,
    RenewalTable,
    limit_constants,
    potential,
)

__all__ = [
    "CrossingKernel",
    "InvariantMeasure",
    "CrossingSolution",
    "crossing_kernel",
    "invariant_measure",
    "essential_class",
    "gamma",
    "gamma_pairings",
    "solve_crossing_chain",
]

MAX_ROW_DEFECT = 1e-6


@dataclass(frozen=True)
class CrossingKernel:
    """Crossing kernel restricted to the window ``[-M, M]``.

    ``matrix[i, j] = C(sites[i], sites[j])``; ``row_defect[i]`` is the mass of
    row ``i`` that falls outside the window.
    """

    M: int
    matrix: np.ndarray
    row_defect: np.ndarray
    alpha: float

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def index(self, x: int) -> int:
        if abs(x) > self.M:
            raise IndexError(f"site {x} outside window [-{self.M}, {self.M}]")
        return int(x) + self.M

    def __call__(self, x: int, y: int) -> float:
        return float(self.matrix[self.index(x), self.index(y)])

    def row(self, x: int) -> dict[int, float]:
        r = self.matrix[self.index(x)]
        return {int(self.sites[j]): float(r[j]) for j in np.nonzero(r)[0]}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "C"])
            for i, j in zip(*np.nonzero(self.matrix)):
                w.writerow([int(self.sites[i]), int(self.sites[j]), repr(float(self.matrix[i, j]))])


def _crossing_row(heights: LatticePmf, U: np.ndarray, m: int) -> dict[int, float]:
    """Landing law (as overshoot ``y >= 0``) for a start at depth ``m >= 1``.

    The ladder process started at ``-m`` crosses into ``{0, 1, ...}``; ``U`` is
    the potential of the ascending ladder heights ``heights``.
    """
    row: dict[int, float] = {}
    for k, q in heights:
        # t = y + m - k runs over [max(0, m - k), m - 1]
        for y in range(max(0, k - m), k):
            row[y] = row.get(y, 0.0) + q * U[y + m - k]
    return row


def crossing_kernel(
    mu: LatticePmf,
    mu_prime: LatticePmf,
    alpha: float,
    M: int = 64,
    ladders: tuple[LadderLaw, LadderLaw] | None = None,
    potentials: tuple[RenewalTable, RenewalTable] | None = None,
    grow: bool = False,
    max_M: int = 512,
) -> CrossingKernel:
    """Assemble the crossing kernel on ``[-M, M]``.

    Raises
    ------
    WindowTooSmall
        If some row loses more than 1e-6 of its mass outside the window
        (with ``grow=True`` the window is doubled up to ``max_M`` first).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if ladders is None:
        ladders = (ladder_law(mu, "ascending"), ladder_law(mu_prime, "descending"))
    up, down = ladders
    while True:
        if potentials is None or potentials[0].x_max < M:
            pots = (potential(up, M), potential(down, M))
        else:
            pots = potentials
        K = _assemble(mu, mu_prime, alpha, M, up, down, pots)
        if K.row_defect.max() <= MAX_ROW_DEFECT:
            return K
        if not grow or 2 * M > max_M:
            raise WindowTooSmall(
                f"max row defect {K.row_defect.max():.3g} on window M={M}"
            )
        M *= 2


def _assemble(mu, mu_prime, alpha, M, up, down, pots) -> CrossingKernel:
    n = 2 * M + 1
    C = np.zeros((n, n))
    U_up, U_down = pots[0].values, pots[1].values
    h_up, h_down = up.magnitudes, down.magnitudes
    for m in range(1, M + 1):
        for y, p in _crossing_row(h_up, U_up, m).items():
            if y <= M:
                C[M - m, M + y] += p
        for y, p in _crossing_row(h_down, U_down, m).items():
            if y <= M:
                C[M + m, M - y] += p
    eta = mixture(mu, mu_prime, alpha)
    C[M] = eta.dense(-M, M)
    defect = np.clip(1.0 - C.sum(axis=1), 0.0, None)
    return CrossingKernel(M, C, defect, float(alpha))


def essential_class(kernel: CrossingKernel, start: int = 0) -> np.ndarray:
    """Sites of the closed communication class reached from ``start``."""
    G = csr_matrix(kernel.matrix > 0)
    reach = np.sort(breadth_first_order(G, kernel.index(start), return_predecessors=False))
    sub = G[reach][:, reach]
    ncomp, labels = connected_components(sub, directed=True, connection="strong")
    for comp in range(ncomp):
        members = np.nonzero(labels == comp)[0]
        outside = np.setdiff1d(np.arange(len(reach)), members)
        if sub[members][:, outside].nnz == 0:
            return kernel.sites[reach[members]]
    raise RuntimeError("no closed class reachable; window too small")


@dataclass(frozen=True)
class InvariantMeasure:
    sites: np.ndarray
    weights: np.ndarray
    support: np.ndarray
    iterations: int
    residual: float

    def __call__(self, x: int) -> float:
        i = int(x) - int(self.sites[0])
        return float(self.weights[i]) if 0 <= i < len(self.weights) else 0.0

    def pair(self, f) -> float:
        """``nu(f) = sum_x nu(x) f(x)`` for a vectorized ``f``."""
        return float(np.dot(self.weights, f(self.sites)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "nu"])
            for x, p in zip(self.sites, self.weights):
                if p > 0:
                    w.writerow([int(x), repr(float(p))])


def invariant_measure(
    kernel: CrossingKernel, tol: float = 1e-12, max_iter: int = 100_000, start: int = 0
) -> InvariantMeasure:
    """Stationary law by power iteration from the uniform law on the window.

    The lazy kernel ``(I + C) / 2`` is iterated; it has the same fixed point
    and rules out periodic oscillation.  Stops when ``|nu C - nu|_1 <= tol``.

    Raises
    ------
    NoConvergence
        After ``max_iter`` sweeps.
    """
    C = kernel.matrix
    nu = np.full(C.shape[0], 1.0 / C.shape[0])
    resid = np.inf
    for it in range(1, max_iter + 1):
        step = nu @ C
        step /= step.sum()
        resid = float(np.abs(step - nu).sum())
        if resid <= tol:
            nu = step
            break
        nu = 0.5 * (nu + step)
    else:
        raise NoConvergence(f"residual {resid:.3g} after {max_iter} iterations")
    cls = essential_class(kernel, start)
    mask = np.isin(kernel.sites, cls)
    nu = np.where(mask, nu, 0.0)
    nu /= nu.sum()
    resid = float(np.abs(nu @ C - nu).sum())
    return InvariantMeasure(kernel.sites, nu, cls, it, resid)


def gamma_pairings(nu: InvariantMeasure, up: RenewalTable, down: RenewalTable) -> tuple[float, float]:
    """``(nu(h_a(-x)) over x <= -1, nu(h'_d(x)) over x >= 1)``; site 0 enters neither."""
    x = nu.sites
    neg = x <= -1
    pos = x >= 1
    a = float(np.dot(nu.weights[neg], up.h(-x[neg])))
    d = float(np.dot(nu.weights[pos], down.h(x[pos])))
    return a, d


def gamma(nu: InvariantMeasure, tables: tuple[RenewalTable, RenewalTable], constants: LimitConstants) -> float:
    """Skew parameter ``c' nu(h'_d) / (c nu(h_a(-.)) + c' nu(h'_d))``.

    Raises
    ------
    DegenerateMeasure
        If both pairings vanish.
    """
    a, d = gamma_pairings(nu, *tables)
    den = constants.c * a + constants.c_prime * d
    if den <= 0:
        raise DegenerateMeasure("nu puts no weight on either half-line")
    return constants.c_prime * d / den


@dataclass(frozen=True)
class CrossingSolution:
    """Everything needed downstream, computed with one interval convention."""

    mu: LatticePmf
    mu_prime: LatticePmf
    alpha: float
    ladders: tuple[LadderLaw, LadderLaw]
    tables: tuple[RenewalTable, RenewalTable]
    constants: LimitConstants
    kernel: CrossingKernel
    nu: InvariantMeasure
    gamma: float
    pairings: tuple[float, float]

    @property
    def renewal_constant(self) -> float:
        """``2 pi (c nu(h_a(-.)) + c' nu(h'_d))``."""
        a, d = self.pairings
        return 2 * np.pi * (self.constants.c * a + self.constants.c_prime * d)

    @property
    def tail_constant(self) -> float:
        """``2 (c nu(h_a(-.)) + c' nu(h'_d))``, the sqrt(n) tail of sum r_j."""
        return self.renewal_constant / np.pi


def solve_crossing_chain(
    mu: LatticePmf,
    mu_prime: LatticePmf,
    alpha: float,
    M: int = 64,
    convention: str = DEFAULT_CONVENTION,
    tol: float = 1e-12,
    x_max: int = 256,
) -> CrossingSolution:
    ladders = (ladder_law(mu, "ascending"), ladder_law(mu_prime, "descending"))
    x_max = max(x_max, M)
    tables = (potential(ladders[0], x_max, convention), potential(ladders[1], x_max, convention))
    consts = limit_constants(mu, mu_prime, ladders=ladders)
    K = crossing_kernel(mu, mu_prime, alpha, M, ladders, tables, grow=True)
    nu = invariant_measure(K, tol)
    pair = gamma_pairings(nu, *tables)
    g = gamma(nu, tables, consts)
    return CrossingSolution(mu, mu_prime, alpha, ladders, tables, consts, K, nu, g, pair)
