"""Monte Carlo: the rescaled oscillating walk against skew Brownian motion.

Run: python demos/04_invariance_principle.py [paths]

Paths are reproducible: each draws from its own counter-based stream, so
the sample does not depend on the number of worker processes.  The KS
distance stays inside the sampling band plus the lattice step.
"""
import sys

import numpy as np

from oscwalk import SkewKernel, WalkConfig, make_pmf, marginal_cdf, solve_crossing_chain
from oscwalk.simulate import mc_samples
from oscwalk.stats import EmpiricalDistribution, dkw_band, ks_distance

paths = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
mu = make_pmf({-1: 1 / 3, 0: 1 / 3, 1: 1 / 3})
mu_prime = make_pmf({-2: 0.25, 0: 0.25, 1: 0.5})
gamma = solve_crossing_chain(mu, mu_prime, 0.5).gamma
k = SkewKernel(gamma)
cfg = WalkConfig(mu, mu_prime, 0.5, seed=7)

for n in (100, 1000, 3000):
    x = mc_samples(cfg, n, [1.0], paths)[:, 0]
    ks = ks_distance(EmpiricalDistribution.from_sample(x), lambda q: marginal_cdf(k, 1.0, 0.0, q))
    # a lattice walk has jumps of order 1/(sigma sqrt(n)) in its CDF
    lattice = 1 / (min(cfg.sigma, cfg.sigma_prime) * np.sqrt(n))
    print(f"n = {n:5d}: P[X > 0] = {np.mean(x > 0):.4f} (gamma = {gamma:.4f}), KS = {ks:.4f}, "
          f"DKW99 + lattice = {dkw_band(paths) + lattice:.4f}")
