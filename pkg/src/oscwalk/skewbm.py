"""Limit laws: skew Brownian motion, Brownian meander, Brownian excursion.

The skew-BM heat kernel is

    p^g_t(x, y) = p_t(x, y) + (2g - 1) sign(y) p_t(0, |x| + |y|),

with ``sign(0) = 0``.  One-dimensional integrals of it are Gaussian CDFs,
so marginal CDFs are closed form and rectangle probabilities of the
two-time density need only one numerical integration.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.integrate import IntegrationWarning
from scipy.special import ndtr

from .errors import QuadratureNotConverged

__all__ = [
    "SkewKernel",
    "gaussian_kernel",
    "heat_kernel",
    "marginal_cdf",
    "kernel_cdf",
    "fdd_density",
    "quad_cell",
    "meander_density",
    "meander_cdf",
    "excursion_bridge_density",
    "excursion_bridge_cdf",
    "classical_integral",
    "write_density_csv",
]

QUAD_TOL = 1e-9


@dataclass(frozen=True)
class SkewKernel:
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    @property
    def skew(self) -> float:
        return 2.0 * self.gamma - 1.0

    def flipped(self) -> "SkewKernel":
        return SkewKernel(1.0 - self.gamma)


def gaussian_kernel(t, x, y):
    """Brownian transition density ``p_t(x, y)``."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return np.exp(-d * d / (2 * t)) / np.sqrt(2 * np.pi * t)


def heat_kernel(k: SkewKernel, t, x, y):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return gaussian_kernel(t, x, y) + k.skew * np.sign(y) * gaussian_kernel(t, 0.0, np.abs(x) + np.abs(y))


def kernel_cdf(k: SkewKernel, t, x, q):
    """``int_{-inf}^q p^g_t(x, y) dy`` in closed form (vectorized in ``x``, ``q``)."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    s = np.sqrt(t)
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    ax = np.abs(x)
    base = ndtr((q - x) / s)
    # int_{-inf}^{min(q,0)} -p_t(0, |x| - y) dy
    neg = -ndtr((np.minimum(q, 0.0) - ax) / s)
    # int_0^{max(q,0)} p_t(0, |x| + y) dy
    pos = ndtr((ax + np.maximum(q, 0.0)) / s) - ndtr(ax / s)
    out = base + k.skew * (neg + pos)
    return np.clip(out, 0.0, 1.0)


def marginal_cdf(k: SkewKernel, t: float, start: float, q):
    """Law of the skew BM at time ``t`` started at ``start``, evaluated at ``q``.

    From 0 this reduces to ``2(1 - g) Phi(q / sqrt(t))`` for ``q <= 0`` and
    ``(1 - g) + g (2 Phi(q / sqrt(t)) - 1)`` for ``q > 0``.
    """
    return kernel_cdf(k, t, start, q)


def fdd_density(k: SkewKernel, times, u, v):
    """Joint density of ``(W(t1), W(t2))`` from 0."""
    t1, t2 = times
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    return heat_kernel(k, t1, 0.0, u) * heat_kernel(k, t2 - t1, u, v)


def _quad(f, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=tol / 10, epsrel=1e-10, limit=200)
        except IntegrationWarning as exc:
            raise QuadratureNotConverged(str(exc)) from exc
    if err > tol:
        raise QuadratureNotConverged(f"error estimate {err:.3g} above {tol:.3g}")
    return val


def _split_quad(f, a, b, tol):
    """Integrate over ``[a, b]`` splitting at the kink 0."""
    if a >= b:
        return 0.0
    if a < 0.0 < b:
        return _quad(f, a, 0.0, tol / 2) + _quad(f, 0.0, b, tol / 2)
    return _quad(f, a, b, tol)


def quad_cell(k: SkewKernel, times, rectangle, tol: float = QUAD_TOL) -> float:
    """``P[W(t1) in [a1, b1], W(t2) in [a2, b2]]``; sides may be infinite.

    The inner integral over ``v`` is a closed-form CDF difference; the outer one
    is adaptive Gauss-Kronrod.

    Raises
    ------
    QuadratureNotConverged
        If the error estimate exceeds ``tol``.
    """
    t1, t2 = times
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    (a1, b1), (a2, b2) = rectangle
    if a1 >= b1 or a2 >= b2:
        return 0.0
    dt = t2 - t1

    def inner(u):
        return heat_kernel(k, t1, 0.0, u) * (kernel_cdf(k, dt, u, b2) - kernel_cdf(k, dt, u, a2))

    return float(_split_quad(inner, a1, b1, tol))


def meander_density(t, u):
    """Rayleigh density ``(u / t) exp(-u^2 / 2t)`` for ``u >= 0``."""
    u = np.asarray(u, dtype=float)
    return np.where(u >= 0, u / t * np.exp(-u * u / (2 * t)), 0.0)


def meander_cdf(t, u):
    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    return -np.expm1(-u * u / (2 * t))


def _excursion_scale(s, t):
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    return s * (t - s) / t


def excursion_bridge_density(s, t, u):
    """Marginal at time ``s`` of a Brownian excursion of length ``t``.

    ``2 u^2 exp(-u^2 / 2a) / sqrt(2 pi a^3)`` with ``a = s (t - s) / t``.
    """
    a = _excursion_scale(s, t)
    u = np.asarray(u, dtype=float)
    return np.where(u >= 0, 2 * u * u * np.exp(-u * u / (2 * a)) / np.sqrt(2 * np.pi * a**3), 0.0)


def excursion_bridge_cdf(s, t, u):
    a = _excursion_scale(s, t)
    z = np.maximum(np.asarray(u, dtype=float), 0.0) / np.sqrt(a)
    phi = np.exp(-z * z / 2) / np.sqrt(2 * np.pi)
    return np.clip(2 * ndtr(z) - 1 - 2 * z * phi, 0.0, 1.0)


def classical_integral(lam1: float, lam2: float) -> tuple[float, float]:
    """``int_0^inf x^{-1/2} exp(-l1 x - l2 / x) dx`` by quadrature and in closed form."""
    if lam1 <= 0 or lam2 < 0:
        raise ValueError("need lam1 > 0, lam2 >= 0")
    # x = w^2 removes the endpoint singularity
    f = lambda w: 2.0 * np.exp(-lam1 * w * w - (lam2 / (w * w) if w > 0 else (np.inf if lam2 > 0 else 0.0)))
    num = _quad(f, 0.0, np.inf, 1e-9)
    return num, float(np.sqrt(np.pi / lam1) * np.exp(-2 * np.sqrt(lam1 * lam2)))


def write_density_csv(path, columns: dict) -> None:
    """Write equal-length columns, e.g. ``{"u": us, "density": f}``."""
    names = list(columns)
    data = [np.ravel(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
