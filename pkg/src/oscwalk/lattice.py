"""Finite-support probability mass functions on the integer lattice.

A :class:`LatticePmf` holds the step laws of the two half-line walks, and is
also the container returned for ladder-height laws.  Everything here is exact
finite summation; nothing is estimated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import NegativeProb, NotNormalized

__all__ = [
    "LatticePmf",
    "MomentReport",
    "HypothesisReport",
    "make_pmf",
    "moments",
    "is_strongly_aperiodic",
    "check_hypotheses",
    "sample",
    "convolve",
    "reflect",
    "mixture",
    "pmf_to_text",
    "pmf_from_text",
]

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class LatticePmf:
    """Probability mass function with finite support on Z.

    Use :func:`make_pmf` to build one; the constructor trusts its input.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.support)

    def __iter__(self):
        return iter(zip(self.support.tolist(), self.probs.tolist()))

    def __eq__(self, other):
        if not isinstance(other, LatticePmf):
            return NotImplemented
        return np.array_equal(self.support, other.support) and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self):
        return hash((self.support.tobytes(), self.probs.tobytes()))

    def __repr__(self):
        body = ", ".join(f"{s}: {p:.6g}" for s, p in self)
        return f"LatticePmf({{{body}}})"

    @property
    def min_site(self) -> int:
        return int(self.support[0])

    @property
    def max_site(self) -> int:
        return int(self.support[-1])

    def prob(self, site: int) -> float:
        i = np.searchsorted(self.support, site)
        if i < len(self.support) and self.support[i] == site:
            return float(self.probs[i])
        return 0.0

    def as_dict(self) -> dict[int, float]:
        return dict(self)

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Probabilities on the sites ``lo..hi`` (inclusive) as a dense array."""
        out = np.zeros(hi - lo + 1)
        keep = (self.support >= lo) & (self.support <= hi)
        out[self.support[keep] - lo] = self.probs[keep]
        return out

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    @property
    def variance(self) -> float:
        m = self.mean
        return float(np.dot((self.support - m) ** 2, self.probs))


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    abs_moments: Mapping[float, float] = field(default_factory=dict)
    _pmf: LatticePmf | None = field(default=None, repr=False, compare=False)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))

    def abs_moment(self, p: float) -> float:
        if p in self.abs_moments:
            return self.abs_moments[p]
        if self._pmf is None:
            raise KeyError(p)
        return float(np.dot(np.abs(self._pmf.support) ** p, self._pmf.probs))


def make_pmf(entries, *, drop_zeros: bool = True) -> LatticePmf:
    """Build a normalized, sorted pmf from ``(site, prob)`` pairs or a mapping.

    Probabilities may be floats or :class:`fractions.Fraction`; exact entries
    are renormalized in rational arithmetic before conversion.  Repeated sites
    are merged.  Zero-probability sites are stripped (or rejected when
    ``drop_zeros`` is false), so the stored support is the essential support.

    Raises
    ------
    NegativeProb
        If any probability is negative.
    NotNormalized
        If the total mass differs from 1 by more than 1e-9.
    """
    if isinstance(entries, Mapping):
        entries = list(entries.items())
    entries = list(entries)
    if not entries:
        raise ValueError("a pmf needs at least one entry")

    merged: dict[int, object] = {}
    exact = all(isinstance(p, (int, Fraction)) for _, p in entries)
    for site, p in entries:
        if p < 0:
            raise NegativeProb(f"negative probability {p} at site {site}")
        merged[int(site)] = merged.get(int(site), 0) + p

    total = sum(merged.values())
    if abs(float(total) - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"probabilities sum to {float(total)!r}, not 1")

    if not drop_zeros and any(p == 0 for p in merged.values()):
        raise ValueError("zero-probability site in pmf entries")
    items = sorted((s, p) for s, p in merged.items() if p != 0)
    if exact:
        probs = [float(Fraction(p) / Fraction(total)) for _, p in items]
    else:
        probs = np.array([float(p) for _, p in items])
        probs = probs / probs.sum()
    return LatticePmf(np.array([s for s, _ in items]), np.asarray(probs, dtype=float))


def moments(pmf: LatticePmf, p: float | Iterable[float] = ()) -> MomentReport:
    """Mean, variance and the requested absolute moments E|X|^p."""
    ps = [p] if np.isscalar(p) else list(p)
    absm = {q: float(np.dot(np.abs(pmf.support) ** q, pmf.probs)) for q in ps}
    return MomentReport(pmf.mean, pmf.variance, absm, pmf)


def is_strongly_aperiodic(pmf: LatticePmf) -> bool:
    """False iff the support lies in a single coset ``b + aZ`` with ``a > 1``."""
    if len(pmf) < 2:
        return False
    s = pmf.support
    diffs = s[1:] - s[0]
    return int(np.gcd.reduce(diffs)) == 1


def positive_part_moment(pmf: LatticePmf, p: float) -> float:
    pos = np.clip(pmf.support, 0, None).astype(float)
    return float(np.dot(pos**p, pmf.probs))


@dataclass(frozen=True)
class HypothesisReport:
    h1: bool
    h2: bool
    h3: bool
    h4: bool
    mean: float
    mean_prime: float
    variance: float
    variance_prime: float
    aperiodic: bool
    aperiodic_prime: bool
    h4_delta: float
    h4_moment: float
    h4_moment_prime: float

    @property
    def ok(self) -> bool:
        return self.h1 and self.h2 and self.h3 and self.h4

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["ok"] = self.ok
        return d


def check_hypotheses(
    mu: LatticePmf, mu_prime: LatticePmf, delta: float = 0.5, center_tol: float = 1e-12
) -> HypothesisReport:
    """Evaluate the four standing assumptions on a pair of step laws.

    Finite support makes the variance and the ``3 + delta`` moment condition
    automatic; their values are reported anyway.
    """
    m, mp = mu.mean, mu_prime.mean
    ap, app = is_strongly_aperiodic(mu), is_strongly_aperiodic(mu_prime)
    up = positive_part_moment(mu, 3 + delta)
    down = positive_part_moment(reflect(mu_prime), 3 + delta)
    return HypothesisReport(
        h1=True,
        h2=abs(m) <= center_tol and abs(mp) <= center_tol,
        h3=ap and app,
        h4=bool(np.isfinite(up) and np.isfinite(down)),
        mean=m,
        mean_prime=mp,
        variance=mu.variance,
        variance_prime=mu_prime.variance,
        aperiodic=ap,
        aperiodic_prime=app,
        h4_delta=delta,
        h4_moment=up,
        h4_moment_prime=down,
    )


def sample(pmf: LatticePmf, rng: np.random.Generator, size=None):
    """Draw sites by CDF inversion; reproducible for a given generator state."""
    u = rng.random(size)
    idx = np.searchsorted(pmf.cdf(), u, side="right")
    out = pmf.support[np.minimum(idx, len(pmf) - 1)]
    return int(out) if size is None else out


def convolve(a: LatticePmf, b: LatticePmf) -> LatticePmf:
    lo = a.min_site + b.min_site
    dense = np.convolve(a.dense(a.min_site, a.max_site), b.dense(b.min_site, b.max_site))
    sites = np.arange(lo, lo + len(dense))
    keep = dense > 0
    return LatticePmf(sites[keep], dense[keep] / dense[keep].sum())


def reflect(pmf: LatticePmf) -> LatticePmf:
    """The law of ``-X``."""
    return LatticePmf(-pmf.support[::-1], pmf.probs[::-1].copy())


def mixture(a: LatticePmf, b: LatticePmf, weight: float) -> LatticePmf:
    """``weight * a + (1 - weight) * b`` with null sites removed."""
    d: dict[int, float] = {}
    for s, p in a:
        d[s] = d.get(s, 0.0) + weight * p
    for s, p in b:
        d[s] = d.get(s, 0.0) + (1.0 - weight) * p
    return make_pmf([(s, p) for s, p in d.items() if p > 0])


def pmf_to_text(pmf: LatticePmf, comment: str | None = None) -> str:
    lines = [f"# {comment}"] if comment else []
    lines += [f"{s} {p!r}" for s, p in pmf]
    return "\n".join(lines) + "\n"


def pmf_from_text(text: str) -> LatticePmf:
    """Parse ``site probability`` lines; ``#`` starts a comment."""
    entries = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        site, prob = line.split()
        entries.append((int(site), Fraction(prob) if "/" in prob else float(prob)))
    return make_pmf(entries)
