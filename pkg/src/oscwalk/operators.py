"""Operator renewal sequence of the crossing chain.

``C_n(x, y) = P_x[C_1 = n, X_n = y]`` and ``H_n = sum_{j=1}^n C_j H_{n-j}``
(``H_0 = I``), so that ``H_n(x, y) = sum_k P_x[C_k = n, X_n = y]``.

Every crossing lands in a small set ``T`` of sites near 0 (the columns
where some ``C_n`` is nonzero).  The recursion is therefore run on the
``T x T`` blocks only, and a full row is recovered on demand through
``H_n(x, T) = sum_j C_j(x, T) H_{n-j}(T, T)`` for ``n >= 1``.  This keeps
memory at ``O(N |T|^2)`` instead of ``O(N M^2)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .crossing import CrossingSolution, _crossing_row
from .fluctuation import DEFAULT_DEPTH_TOL, killed_dp
from .lattice import LatticePmf, mixture, reflect
from .renewal import potential

__all__ = [
    "WeightedNorm",
    "OperatorSeq",
    "GouezelReport",
    "build_cn",
    "build_hn",
    "rn_sequence",
    "tail_sequence",
    "weighted_row_norm",
    "verify_gouezel_limit",
    "kernel_sum_check",
    "dense_hn",
]


@dataclass(frozen=True)
class WeightedNorm:
    """Weight ``1 + |x|^(1 + delta)`` of the space on which ``C_n`` acts."""

    delta: float = 0.5

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def weight(self, x) -> np.ndarray:
        return 1.0 + np.abs(np.asarray(x, dtype=float)) ** (1.0 + self.delta)


def weighted_row_norm(matrix: np.ndarray, norm: WeightedNorm = WeightedNorm(), sites=None) -> float:
    """``sup_x sum_y |A(x, y)| w(y) / w(x)`` on a window.

    ``sites`` label rows and columns; by default a square matrix of odd size
    ``2M + 1`` is taken to live on ``[-M, M]``.
    """
    A = np.asarray(matrix, dtype=float)
    if sites is None:
        M = (A.shape[0] - 1) // 2
        sites = np.arange(-M, M + 1)
    w = norm.weight(sites)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A) @ w / w))


@dataclass
class OperatorSeq:
    """Crossing-time operators on the window ``[-M, M]`` up to horizon ``N``.

    ``C_blocks[n]`` holds the columns ``T`` of ``C_n`` (shape ``(2M+1, |T|)``),
    ``G[n]`` holds ``H_n`` restricted to ``T x T`` once :func:`build_hn` ran.
    ``survival[i, n] = P_{sites[i]}[C_1 > n]``.
    """

    M: int
    N: int
    landing: np.ndarray
    C_blocks: np.ndarray
    survival: np.ndarray
    truncated: np.ndarray | None = None
    final_alive: dict = field(repr=False, default_factory=dict)
    G: np.ndarray | None = field(repr=False, default=None)
    delta: float = 0.5
    c_limit: float | None = None

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def landing_index(self) -> np.ndarray:
        return self.landing + self.M

    def C(self, n: int) -> np.ndarray:
        """Dense ``C_n`` on the window."""
        out = np.zeros((2 * self.M + 1, 2 * self.M + 1))
        if 1 <= n <= self.N:
            out[:, self.landing_index] = self.C_blocks[n]
        return out

    def C_sum(self) -> np.ndarray:
        out = np.zeros((2 * self.M + 1, 2 * self.M + 1))
        out[:, self.landing_index] = self.C_blocks[1:].sum(axis=0)
        return out

    def H(self, n: int) -> np.ndarray:
        """Dense ``H_n`` on the window, from the stored ``T x T`` blocks."""
        if self.G is None:
            raise ValueError("call build_hn first")
        if not 0 <= n <= self.N:
            raise IndexError(f"n={n} outside 0..{self.N}")
        size = 2 * self.M + 1
        if n == 0:
            return np.eye(size)
        block = np.tensordot(self.C_blocks[1 : n + 1], self.G[n - 1 :: -1], axes=([0, 2], [0, 1]))
        out = np.zeros((size, size))
        out[:, self.landing_index] = block
        return out

    def H_rows(self, n: int, xs) -> np.ndarray:
        """Rows ``H_n(x, .)`` for the given sites only."""
        idx = np.asarray(xs) + self.M
        return self.H(n)[idx]


def build_cn(
    mu: LatticePmf,
    mu_prime: LatticePmf,
    alpha: float,
    M: int = 64,
    N: int = 4096,
    depth_tol: float = DEFAULT_DEPTH_TOL,
) -> OperatorSeq:
    """First-crossing operators ``C_1..C_N`` on ``[-M, M]``.

    Row ``x <= -1`` is the exit law of the negative-side killed walk started at
    ``x``; row ``x >= 1`` the positive-side mirror; row 0 is one step of
    ``alpha mu + (1 - alpha) mu'``.

    Raises
    ------
    TruncationBudgetExceeded
        Propagated from the killed-walk engine.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    size = 2 * M + 1
    starts = np.arange(1, M + 1)
    captured: dict = {}

    def keep_last(side):
        def hook(n, A):
            if n == N:
                captured[side] = A.copy()
        return hook

    neg = killed_dp(mu, starts, N, depth_tol, on_step=keep_last("negative"))
    pos = killed_dp(reflect(mu_prime), starts, N, depth_tol, on_step=keep_last("positive"))

    wn = min(neg.absorbed.shape[2], M + 1)
    wp = min(pos.absorbed.shape[2], M + 1)
    eta = mixture(mu, mu_prime, alpha).dense(-M, M)
    hit = np.zeros(size, dtype=bool)
    hit[M : M + wn] = neg.absorbed[:, :, :wn].any(axis=(0, 1))
    hit[M - np.arange(wp)] |= pos.absorbed[:, :, :wp].any(axis=(0, 1))
    hit |= eta > 0
    landing = np.nonzero(hit)[0]
    col = np.full(size, -1)
    col[landing] = np.arange(len(landing))

    blocks = np.zeros((N + 1, size, len(landing)))
    # row -x sits at index M - x and lands at overshoot w >= 0
    for w in range(wn):
        if col[M + w] >= 0:
            blocks[:, M - starts, col[M + w]] = neg.absorbed[:, :, w].T
    for w in range(wp):
        if col[M - w] >= 0:
            blocks[:, M + starts, col[M - w]] = pos.absorbed[:, :, w].T
    blocks[1, M] = eta[landing]
    survival = np.zeros((size, N + 1))
    survival[M - starts] = neg.survival
    survival[M + starts] = pos.survival
    survival[M, 0] = 1.0
    truncated = np.zeros(size)
    truncated[M - starts] = neg.truncated[:, -1]
    truncated[M + starts] = pos.truncated[:, -1]
    return OperatorSeq(M, N, landing - M, blocks, survival, truncated, captured)


def build_hn(seq: OperatorSeq) -> OperatorSeq:
    """Run the renewal recursion on the landing block; fills ``seq.G``."""
    T = len(seq.landing)
    Ct = seq.C_blocks[:, seq.landing_index, :]  # (N+1, T, T)
    G = np.zeros((seq.N + 1, T, T))
    G[0] = np.eye(T)
    for n in range(1, seq.N + 1):
        G[n] = np.tensordot(Ct[1 : n + 1], G[n - 1 :: -1], axes=([0, 2], [0, 1]))
    seq.G = G
    return seq


def dense_hn(C_mats: np.ndarray) -> np.ndarray:
    """Reference recursion on full matrices; ``C_mats[0]`` is ignored."""
    N = len(C_mats) - 1
    H = np.zeros_like(C_mats)
    H[0] = np.eye(C_mats.shape[1])
    for n in range(1, N + 1):
        H[n] = sum(C_mats[j] @ H[n - j] for j in range(1, n + 1))
    return H


def rn_sequence(seq: OperatorSeq, nu) -> np.ndarray:
    """``r_n = sum_x nu(x) P_x[C_1 = n]`` for ``n = 0..N`` (``r_0 = 0``)."""
    w = _nu_on_window(nu, seq.M)
    return w @ seq.C_blocks.sum(axis=2).T


def tail_sequence(seq: OperatorSeq, nu) -> np.ndarray:
    """``sum_{j > n} r_j = sum_x nu(x) P_x[C_1 > n]`` without horizon truncation."""
    return _nu_on_window(nu, seq.M) @ seq.survival


def _nu_on_window(nu, M: int) -> np.ndarray:
    out = np.zeros(2 * M + 1)
    for x, p in zip(nu.sites, nu.weights):
        if p > 0:
            if abs(x) > M:
                raise ValueError("invariant measure not supported in the operator window")
            out[x + M] = p
    return out


def kernel_sum_check(seq: OperatorSeq, sol: CrossingSolution) -> dict:
    """Compare ``sum_{n<=N} C_n`` with the closed-form kernel.

    The truncated sum alone converges like ``N^{-1/2}``; the exact remainder
    ``sum_z P_x[C_1 > N, X_N = z] C(z, y)`` is added from the alive law at
    ``N`` (Markov property), which makes the identity checkable to round-off.
    """
    M = seq.M
    K = sol.kernel
    if K.M != M:
        raise ValueError("kernel and operators must share the window")
    S = seq.C_sum()
    remainder = np.zeros_like(S)
    depth_max = max(a.shape[1] for a in seq.final_alive.values()) if seq.final_alive else 0
    x_max = max(depth_max + 2, sol.tables[0].x_max)
    U_up = potential(sol.ladders[0], x_max).values
    U_dn = potential(sol.ladders[1], x_max).values
    for side, A in seq.final_alive.items():
        heights = (sol.ladders[0] if side == "negative" else sol.ladders[1]).magnitudes
        U = U_up if side == "negative" else U_dn
        rows = np.zeros((A.shape[1], M + 1))
        for d in range(A.shape[1]):
            for y, p in _crossing_row(heights, U, d + 1).items():
                if y <= M:
                    rows[d, y] += p
        contrib = A @ rows  # (M, M+1): start x=1..M, overshoot 0..M
        starts = np.arange(1, M + 1)
        if side == "negative":
            remainder[M - starts, M : 2 * M + 1] = contrib
        else:
            remainder[(M + starts)[:, None], (M - np.arange(M + 1))[None, :]] = contrib
    total = S + remainder
    err = np.abs(total - K.matrix)
    lower_ok = bool(np.all(S <= K.matrix + 1e-12))
    gap = (K.matrix - S).sum(axis=1)
    bound_ok = bool(np.all(gap <= seq.survival[:, -1] + seq.truncated + 1e-12))
    return {
        "max_error": float(err.max()),
        "max_error_truncated_sum": float(np.abs(S - K.matrix).max()),
        "partial_sum_below_kernel": lower_ok,
        "gap_within_survival": bound_ok,
        "max_truncated": float(seq.truncated.max()),
    }


@dataclass
class GouezelReport:
    ns: list
    core: int
    relative_error: list  # sup |sqrt(n) H_n c / nu(y) - 1|
    shape_error: list  # convention-free ratio diagnostic
    c_limit: float
    table: list = field(repr=False, default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "x", "y", "sqrt_n_Hn", "target"])
            w.writerows(self.table)


def verify_gouezel_limit(seq: OperatorSeq, sol: CrossingSolution, ns, core: int = 4) -> GouezelReport:
    """Check ``sqrt(n) H_n(x, y) -> nu(y) / c`` on the core ``|x|, |y| <= core``."""
    if seq.G is None:
        build_hn(seq)
    c_limit = sol.renewal_constant
    seq.c_limit = c_limit
    xs = np.arange(-core, core + 1)
    ys = np.array([y for y in xs if sol.nu(y) > 0])
    nu_y = np.array([sol.nu(y) for y in ys])
    rel, shape, table = [], [], []
    for n in ns:
        Hn = seq.H_rows(n, xs)[:, ys + seq.M] * np.sqrt(n)
        target = nu_y / c_limit
        rel.append(float(np.max(np.abs(Hn / target - 1))))
        ratio = Hn / nu_y  # should be constant
        shape.append(float(ratio.max() / ratio.min() - 1))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                table.append([n, int(x), int(y), float(Hn[i, j]), float(target[j])])
    return GouezelReport(list(ns), core, rel, shape, c_limit, table)


def write_rn_csv(path, r: np.ndarray, tail: np.ndarray) -> None:
    """``(n, r_n, sqrt(n) sum_{j>n} r_j)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "r_n", "tail_stat"])
        for n in range(1, len(r)):
            w.writerow([n, repr(float(r[n])), repr(float(np.sqrt(n) * tail[n]))])
