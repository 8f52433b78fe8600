"""Exact simulation of the oscillating walk and Monte Carlo estimators.

Every path draws one uniform per step from its own counter-based stream,
``Philox`` keyed by ``(seed, path_id)``, and turns it into a step by
inverting the CDF of the law in force (``mu`` below 0, the mixture at 0,
``mu'`` above 0).  Paths are simulated in fixed blocks of ids, so results do
not depend on how blocks are spread over worker processes.

The conditional samplers (meander, excursion bridge) and the crossing-chain
estimator key their streams by ``(seed, block_id)`` instead, since they
discard or reweight most paths.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import HorizonExceeded
from .fluctuation import build_killed_table
from .lattice import LatticePmf, check_hypotheses, mixture
from .stats import EmpiricalDistribution

__all__ = [
    "WalkConfig",
    "PathRecord",
    "ScaledProcess",
    "path_stream",
    "simulate_path",
    "simulate_block",
    "find_crossings",
    "crossing_samples",
    "crossing_occupation",
    "scaled_eval",
    "mc_marginal",
    "mc_fdd",
    "mc_samples",
    "diagnostics_lln_recurrence",
    "sample_meander",
    "sample_excursion_bridge",
    "exact_meander_law",
    "exact_bridge_law",
    "write_samples_csv",
]

BLOCK = 4096
MASK64 = (1 << 64) - 1
CrossingRule = Literal["kernel", "literal"]
Normalization = Literal["value", "left"]


@dataclass(frozen=True)
class WalkConfig:
    """Step laws, mixing weight at 0, start site and seed.

    ``crossing_rule`` fixes where an excursion above 0 ends: ``"kernel"``
    (first time ``<= 0``, mirroring the negative side and the crossing
    kernel) or ``"literal"`` (first time ``<= -1``).
    """

    mu: LatticePmf
    mu_prime: LatticePmf
    alpha: float = 0.5
    start: int = 0
    seed: int = 0
    crossing_rule: CrossingRule = "kernel"
    limit_ok: bool = field(init=False, default=True)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.crossing_rule not in ("kernel", "literal"):
            raise ValueError(f"unknown crossing rule {self.crossing_rule!r}")
        rep = check_hypotheses(self.mu, self.mu_prime)
        if not rep.h2:
            warnings.warn("step laws are not centered; crossings may never occur", stacklevel=2)
        elif not rep.h3:
            warnings.warn("step laws are not strongly aperiodic; limit comparisons disabled", stacklevel=2)
        object.__setattr__(self, "limit_ok", rep.ok)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.mu.variance))

    @property
    def sigma_prime(self) -> float:
        return float(np.sqrt(self.mu_prime.variance))

    def with_seed(self, seed: int) -> "WalkConfig":
        return WalkConfig(self.mu, self.mu_prime, self.alpha, self.start, seed, self.crossing_rule)


class _StepTable:
    """Padded CDF table for the three regimes, row 0: x <= -1, 1: x = 0, 2: x >= 1."""

    def __init__(self, cfg: WalkConfig):
        laws = [cfg.mu, mixture(cfg.mu, cfg.mu_prime, cfg.alpha), cfg.mu_prime]
        K = max(len(p) for p in laws)
        self.cdf = np.full((3, K), 2.0)
        self.sites = np.zeros((3, K), dtype=np.int64)
        for r, p in enumerate(laws):
            c = p.cdf()
            self.cdf[r, : len(p)] = c
            self.sites[r, : len(p)] = p.support
            self.sites[r, len(p) :] = p.support[-1]
        # the last live entry must catch every u < 1
        for r, p in enumerate(laws):
            self.cdf[r, len(p) - 1] = 2.0

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        r = np.sign(x) + 1
        idx = (u[:, None] >= self.cdf[r]).sum(axis=1)
        return self.sites[r, idx]


def path_stream(seed: int, path_id: int) -> np.random.Generator:
    """Independent generator for one path, a pure function of ``(seed, path_id)``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) & MASK64) | (int(path_id) << 64)))


def _block_stream(seed: int, tag: int, block_id: int) -> np.random.Generator:
    key = (int(seed) & MASK64) | ((int(block_id) & ((1 << 48) - 1)) << 64) | (int(tag) << 112)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_block(cfg: WalkConfig, ids, n: int, record=None) -> np.ndarray:
    """Positions of the paths ``ids`` at the times in ``record`` (default all ``0..n``)."""
    ids = np.asarray(ids)
    table = _StepTable(cfg)
    rec = np.arange(n + 1) if record is None else np.asarray(record)
    slot = np.full(n + 1, -1)
    slot[rec] = np.arange(len(rec))
    out = np.empty((len(ids), len(rec)), dtype=np.int64)
    X = np.full(len(ids), cfg.start, dtype=np.int64)
    if slot[0] >= 0:
        out[:, slot[0]] = X
    gens = [path_stream(cfg.seed, i) for i in ids]
    chunk = 1024
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        U = np.stack([g.random(hi - lo) for g in gens]) if gens else np.zeros((0, hi - lo))
        for j in range(hi - lo):
            X = X + table.step(X, U[:, j])
            k = lo + j + 1
            if slot[k] >= 0:
                out[:, slot[k]] = X
    return out


@dataclass
class PathRecord:
    positions: np.ndarray
    crossings: list  # (C_k, X_{C_k}) for k >= 1

    @property
    def n(self) -> int:
        return len(self.positions) - 1


def _crossed(origin: int, x: int, rule: str) -> bool:
    if origin <= -1:
        return x >= 0
    if origin == 0:
        return True
    return x <= (0 if rule == "kernel" else -1)


def find_crossings(positions, rule: CrossingRule = "kernel") -> list:
    """Crossing times and positions recomputed from a finished path."""
    out = []
    origin = int(positions[0])
    for m in range(1, len(positions)):
        x = int(positions[m])
        if _crossed(origin, x, rule):
            out.append((m, x))
            origin = x
    return out


def simulate_path(cfg: WalkConfig, n: int, path_id: int = 0) -> PathRecord:
    """One path ``X_0..X_n`` with its crossings tracked step by step."""
    if n < 1:
        raise ValueError("n must be >= 1")
    table = _StepTable(cfg)
    U = path_stream(cfg.seed, path_id).random(n)
    pos = np.empty(n + 1, dtype=np.int64)
    x = origin = cfg.start
    pos[0] = x
    crossings = []
    for m in range(1, n + 1):
        x = x + int(table.step(np.array([x]), U[m - 1 : m])[0])
        pos[m] = x
        if _crossed(origin, x, cfg.crossing_rule):
            crossings.append((m, x))
            origin = x
    return PathRecord(pos, crossings)


def crossing_samples(cfg: WalkConfig, burn_in: int, k: int, cap: int = 1_000_000, path_id: int = 0) -> np.ndarray:
    """Positions ``X_{C_j}`` for ``j = burn_in + 1 .. burn_in + k`` along one path.

    Raises
    ------
    HorizonExceeded
        If one crossing takes more than ``cap`` steps.
    """
    table = _StepTable(cfg)
    g = path_stream(cfg.seed, path_id)
    out = np.empty(k, dtype=np.int64)
    x = origin = cfg.start
    got = j = since = 0
    buf, p = g.random(4096), 0
    while got < k:
        if p == len(buf):
            buf, p = g.random(4096), 0
        x = x + int(table.step(np.array([x]), buf[p : p + 1])[0])
        p += 1
        since += 1
        if _crossed(origin, x, cfg.crossing_rule):
            j += 1
            origin, since = x, 0
            if j > burn_in:
                out[got] = x
                got += 1
        elif since >= cap:
            raise HorizonExceeded(f"crossing {j + 1} not reached within {cap} steps")
    return out


@dataclass
class OccupationReport:
    counts: dict
    samples: int
    restarts: int
    chains: int

    @property
    def frequencies(self) -> dict:
        return {x: c / self.samples for x, c in sorted(self.counts.items())}


def _occupation_block(cfg, block_id, chains, per_chain, burn_in, cap):
    table = _StepTable(cfg)
    g = _block_stream(cfg.seed, 1, block_id)
    X = np.full(chains, cfg.start, dtype=np.int64)
    origin = X.copy()
    since = np.zeros(chains, dtype=np.int64)
    skip = np.full(chains, burn_in, dtype=np.int64)
    left = np.full(chains, per_chain, dtype=np.int64)
    counts: dict = {}
    restarts = 0
    lim = 0 if cfg.crossing_rule == "kernel" else -1
    act = np.arange(chains)
    while len(act):
        u = g.random(len(act))
        x = X[act] + table.step(X[act], u)
        o = origin[act]
        cr = ((o <= -1) & (x >= 0)) | (o == 0) | ((o >= 1) & (x <= lim))
        s = since[act] + 1
        # censor overlong excursions and restart the chain from 0 with a new burn-in
        cens = ~cr & (s >= cap)
        restarts += int(cens.sum())
        x = np.where(cens, 0, x)
        s = np.where(cr | cens, 0, s)
        take = cr & (skip[act] == 0)
        vals, cnt = np.unique(x[take], return_counts=True)
        for v, c in zip(vals.tolist(), cnt.tolist()):
            counts[v] = counts.get(v, 0) + c
        left[act[take]] -= 1
        skip[act[cr & (skip[act] > 0)]] -= 1
        skip[act[cens]] = burn_in
        X[act] = x
        origin[act] = np.where(cr | cens, x, o)
        since[act] = s
        act = act[left[act] > 0]
    return counts, restarts


def crossing_occupation(
    cfg: WalkConfig,
    chains: int = 20_000,
    per_chain: int = 50,
    burn_in: int = 10,
    cap: int = 100_000,
    workers: int = 1,
) -> OccupationReport:
    """Occupation frequencies of the crossing chain from many independent chains.

    Each chain records ``per_chain`` crossing positions after ``burn_in``
    unrecorded ones.  Excursions longer than ``cap`` steps are abandoned and the
    chain restarts from 0 (with a fresh burn-in); the count is reported.
    """
    blocks = [(b, min(BLOCK, chains - b * BLOCK)) for b in range((chains + BLOCK - 1) // BLOCK)]
    args = [(cfg, b, size, per_chain, burn_in, cap) for b, size in blocks]
    results = _run(_occupation_block, args, workers)
    counts: dict = {}
    restarts = 0
    for c, r in results:
        restarts += r
        for x, v in c.items():
            counts[x] = counts.get(x, 0) + v
    return OccupationReport(counts, chains * per_chain, restarts, chains)


def _run(fn, args, workers):
    if workers <= 1 or len(args) == 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*args)))


@dataclass(frozen=True)
class ScaledProcess:
    """``t -> X^{(n)}(t)``: linear interpolation of ``X`` at ``nt``, divided by
    ``sigma sqrt(n)`` where that value is ``<= 0`` and ``sigma' sqrt(n)`` where it
    is ``>= 0``.  With ``normalization="left"`` the divisor follows the sign of
    ``X_{[nt]}`` instead.
    """

    positions: np.ndarray
    n: int
    sigma: float
    sigma_prime: float
    normalization: Normalization = "value"

    def __call__(self, t):
        return _scale(self.positions[None, :], self.n, t, self.sigma, self.sigma_prime, self.normalization)[0]


def _grid(n: int, t: float) -> tuple[int, float]:
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    k = min(int(np.floor(n * t)), n)
    return k, n * t - k


def _scale(pos, n, t, sigma, sigma_p, normalization="value"):
    k, frac = _grid(n, t)
    left = pos[:, k].astype(float)
    v = left if frac == 0 else left + frac * (pos[:, k + 1] - left)
    ref = v if normalization == "value" else left
    return np.where(ref <= 0, v / sigma, v / sigma_p) / np.sqrt(n)


def scaled_eval(path: PathRecord, cfg: WalkConfig, t: float, n: int | None = None,
                normalization: Normalization = "value") -> float:
    n = path.n if n is None else n
    if path.n < n:
        raise ValueError("path shorter than n")
    return float(ScaledProcess(path.positions, n, cfg.sigma, cfg.sigma_prime, normalization)(t))


def _marginal_block(cfg, ids, n, times, normalization):
    rec = sorted({k for t in times for k in _needed(n, t)})
    pos = simulate_block(cfg, ids, n, rec)
    full = np.zeros((len(ids), n + 1), dtype=np.int64)
    full[:, rec] = pos
    return np.column_stack([_scale(full, n, t, cfg.sigma, cfg.sigma_prime, normalization) for t in times])


def _needed(n, t):
    k, frac = _grid(n, t)
    return (k, k + 1) if frac > 0 else (k,)


def mc_samples(cfg: WalkConfig, n: int, times, paths: int, workers: int = 1,
               normalization: Normalization = "value") -> np.ndarray:
    """``X^{(n)}(t)`` for each time, one row per path in id order."""
    blocks = [np.arange(lo, min(paths, lo + BLOCK)) for lo in range(0, paths, BLOCK)]
    res = _run(_marginal_block, [(cfg, b, n, times, normalization) for b in blocks], workers)
    return np.concatenate(res)


def mc_marginal(cfg: WalkConfig, n: int, t: float, paths: int, workers: int = 1,
                normalization: Normalization = "value") -> EmpiricalDistribution:
    """Empirical law of ``X^{(n)}(t)`` over ``paths`` independent paths."""
    if paths < 1000:
        raise ValueError("paths must be >= 1000")
    return EmpiricalDistribution.from_sample(mc_samples(cfg, n, [t], paths, workers, normalization)[:, 0])


def mc_fdd(cfg: WalkConfig, n: int, times, paths: int, workers: int = 1,
           normalization: Normalization = "value") -> np.ndarray:
    """Pairs ``(X^{(n)}(t1), X^{(n)}(t2))``, one row per path in id order."""
    t1, t2 = times
    if not 0 < t1 < t2 <= 1:
        raise ValueError("need 0 < t1 < t2 <= 1")
    return mc_samples(cfg, n, [t1, t2], paths, workers, normalization)


@dataclass
class LLNReport:
    n: int
    max_ratio: np.ndarray  # per path, max_{m in [n/2, n]} |X_m| / m
    checkpoints: list
    zero_visits: np.ndarray  # (paths, len(checkpoints))


def diagnostics_lln_recurrence(cfg: WalkConfig, n: int = 100_000, paths: int = 100,
                               checkpoints=(1_000, 10_000, 100_000)) -> LLNReport:
    """Law-of-large-numbers and null-recurrence diagnostics over ``paths`` paths."""
    cps = [c for c in checkpoints if 1 <= c <= n] or [n]
    ids = np.arange(paths)
    pos = simulate_block(cfg, ids, n)
    m = np.arange(n // 2, n + 1)
    ratio = np.max(np.abs(pos[:, m]) / np.maximum(m, 1), axis=1)
    zeros = np.cumsum(pos[:, 1:] == 0, axis=1)
    visits = np.stack([zeros[:, c - 1] for c in cps], axis=1)
    return LLNReport(n, ratio, cps, visits)


# ---------------------------------------------------------------------------
# conditioned one-sided walks


def sample_meander(pmf: LatticePmf, x: int, n: int, t: float, survivors: int,
                   seed: int = 0, block: int = 1 << 16, max_blocks: int = 10_000) -> np.ndarray:
    """Values ``(x + S_[nt]) / (sigma sqrt(n))`` of walks started at ``x >= 1``
    with steps ``pmf``, kept when they stay ``>= 1`` up to time ``[nt]``.

    Whole blocks of paths are simulated until ``survivors`` are collected;
    the output is the first ``survivors`` in block order.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    m = int(np.floor(n * t))
    sites, cdf = pmf.support, pmf.cdf()
    cdf = cdf.copy()
    cdf[-1] = 2.0
    sigma = np.sqrt(pmf.variance)
    got: list = []
    total = 0
    for b in range(max_blocks):
        g = _block_stream(seed, 2, b)
        X = np.full(block, x, dtype=np.int64)
        for _ in range(m):
            X = X + sites[np.searchsorted(cdf, g.random(len(X)), side="right")]
            X = X[X >= 1]
            if not len(X):
                break
        got.append(X)
        total += len(X)
        if total >= survivors:
            break
    else:
        raise HorizonExceeded(f"only {total} survivors after {max_blocks} blocks")
    return np.concatenate(got)[:survivors] / (sigma * np.sqrt(n))


def _backward_bridge(pmf: LatticePmf, y: int, m: int, D: int) -> np.ndarray:
    """``b[k, d] = P_{1+d}[stay >= 1 for m - k steps, end at y]``, depths ``0..D-1``."""
    b = np.zeros((m + 1, D))
    b[m, y - 1] = 1.0
    for k in range(m - 1, -1, -1):
        nxt = b[k + 1]
        cur = np.zeros(D)
        for s, p in pmf:
            lo, hi = max(0, -s), min(D, D - s)
            if lo < hi:
                cur[lo:hi] += p * nxt[lo + s : hi + s]
        b[k] = cur
    return b


def sample_excursion_bridge(pmf: LatticePmf, x: int, y: int, n: int, s: float, paths: int,
                            seed: int = 0, depth: int | None = None) -> np.ndarray:
    """Values ``(x + S_[ns]) / (sigma sqrt(n))`` of walks from ``x`` conditioned to
    stay ``>= 1`` up to ``n`` and end at ``y``.

    Exact sampling by the Doob transform: each step is drawn with weights
    ``pmf(s) b_{k+1}(z + s) / b_k(z)`` from the backward table ``b``.
    """
    if x < 1 or y < 1:
        raise ValueError("x and y must be >= 1")
    m = int(np.floor(n * s))
    sigma = np.sqrt(pmf.variance)
    D = depth or int(12 * sigma * np.sqrt(n)) + max(x, y) + 2 * (pmf.max_site - pmf.min_site)
    b = _backward_bridge(pmf, y, n, D)
    if b[0, x - 1] <= 0:
        raise ValueError("conditioning event has probability zero")
    steps, probs = pmf.support, pmf.probs
    g = _block_stream(seed, 3, 0)
    d = np.full(paths, x - 1, dtype=np.int64)
    for k in range(m):
        nd = d[:, None] + steps[None, :]
        ok = (nd >= 0) & (nd < D)
        w = np.where(ok, probs[None, :] * b[k + 1][np.clip(nd, 0, D - 1)], 0.0)
        c = np.cumsum(w, axis=1)
        u = g.random(paths) * c[:, -1]
        j = (u[:, None] >= c).sum(axis=1)
        d = nd[np.arange(paths), np.minimum(j, len(steps) - 1)]
    return (d + 1) / (sigma * np.sqrt(n))


def exact_meander_law(pmf: LatticePmf, x: int, n: int, t: float = 1.0):
    """Exact law of the meander sample: ``(values, probabilities)``."""
    m = int(np.floor(n * t))
    tab = build_killed_table(pmf, x, "positive", m)
    row = tab.alive[m]
    return (np.arange(len(row)) + 1) / (np.sqrt(pmf.variance) * np.sqrt(n)), row / row.sum()


def exact_bridge_law(pmf: LatticePmf, x: int, y: int, n: int, s: float):
    """Exact law of the bridge sample by forward times backward probabilities."""
    m = int(np.floor(n * s))
    tab = build_killed_table(pmf, x, "positive", m)
    fwd = tab.alive[m]
    D = max(len(fwd), int(12 * np.sqrt(pmf.variance * n)) + max(x, y))
    b = _backward_bridge(pmf, y, n - m, D)[0]
    w = np.zeros(D)
    w[: len(fwd)] = fwd
    w *= b
    return (np.arange(D) + 1) / (np.sqrt(pmf.variance) * np.sqrt(n)), w / w.sum()


def write_samples_csv(path, values) -> None:
    """``(path_id, value)`` or ``(path_id, v1, v2)`` rows in path order."""
    v = np.asarray(values)
    v = v[:, None] if v.ndim == 1 else v
    cols = ["value"] if v.shape[1] == 1 else [f"v{i + 1}" for i in range(v.shape[1])]
    np.savetxt(path, np.column_stack([np.arange(len(v)), v]), delimiter=",",
               header=",".join(["path_id"] + cols), comments="", fmt=["%d"] + ["%.17g"] * v.shape[1])
