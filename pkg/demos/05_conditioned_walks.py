"""Walks conditioned to stay positive: meander and excursion bridge.

Run: python demos/05_conditioned_walks.py

The samplers are checked twice: against the exact finite-n law from the
killed-walk DP and against the Brownian limit (Rayleigh meander, excursion
marginal).
"""
import numpy as np

from oscwalk import make_pmf
from oscwalk.simulate import exact_bridge_law, exact_meander_law, sample_excursion_bridge, sample_meander
from oscwalk.skewbm import excursion_bridge_cdf, meander_cdf
from oscwalk.stats import EmpiricalDistribution, ks_distance, ks_distance_discrete

pmf = make_pmf({-2: 0.25, 0: 0.25, 1: 0.5})

for n in (200, 2000):
    m = sample_meander(pmf, 1, n, 1.0, 20_000, seed=1)
    v, p = exact_meander_law(pmf, 1, n)
    print(f"meander n = {n:4d}: KS(sample, Rayleigh) = "
          f"{ks_distance(EmpiricalDistribution.from_sample(m), lambda u: meander_cdf(1.0, u)):.4f}, "
          f"KS(exact law, Rayleigh) = {ks_distance_discrete(v, p, lambda u: meander_cdf(1.0, u)):.4f}")

for n in (200, 2000):
    b = sample_excursion_bridge(pmf, 1, 1, n, 0.5, 20_000, seed=2)
    v, p = exact_bridge_law(pmf, 1, 1, n, 0.5)
    cdf = lambda u: excursion_bridge_cdf(0.5, 1.0, u)
    print(f"bridge  n = {n:4d}: KS(sample, limit) = {ks_distance(EmpiricalDistribution.from_sample(b), cdf):.4f}, "
          f"KS(exact law, limit) = {ks_distance_discrete(v, p, cdf):.4f}, mean = {np.mean(b):.4f}")
