"""How far the walk's two-time law is from skew-BM at finite n.

Run: python demos/06_finite_n_bias.py

The joint law of (X_{n/2}, X_n) from 0 is computed exactly by powers of the
transition matrix on a wide window, then binned into the same cells as the
Monte Carlo two-time check.  The gap to the limit shrinks like n^-1/2, and
its size sets how many paths a cell z-test can use before the test starts
detecting the finite-n correction rather than a bug.
"""
import numpy as np

from oscwalk import SkewKernel, make_pmf, solve_crossing_chain
from oscwalk.cli import _cell_weight, snap_edge
from oscwalk.lattice import mixture
from oscwalk.skewbm import quad_cell

mu = make_pmf({-1: 1 / 3, 0: 1 / 3, 1: 1 / 3})
mu_prime = make_pmf({-2: 0.25, 0: 0.25, 1: 0.5})
sigma, sigma_p = np.sqrt(mu.variance), np.sqrt(mu_prime.variance)
k = SkewKernel(solve_crossing_chain(mu, mu_prime, 0.5).gamma)


def transition_matrix(L):
    sites = np.arange(-L, L + 1)
    P = np.zeros((len(sites), len(sites)))
    eta = mixture(mu, mu_prime, 0.5)
    for i, x in enumerate(sites):
        for s, p in mu if x < 0 else (mu_prime if x > 0 else eta):
            if 0 <= i + s < len(sites):
                P[i, i + s] += p
    return sites, P


for n in (1250, 5000):
    L = int(13 * np.sqrt(n))
    sites, P = transition_matrix(L)
    half = np.linalg.matrix_power(P, n // 2)
    joint = half[L][:, None] * half
    v = np.where(sites <= 0, sites / sigma, sites / sigma_p) / np.sqrt(n)
    lat = (n, sigma, sigma_p)
    lo, hi = zip(*[(snap_edge(-0.5, t, lat), snap_edge(0.5, t, lat)) for t in (0.5, 1.0)])
    centre = ((lo[0], hi[0]), (lo[1], hi[1]))
    quadrant = ((0, np.inf), (0, np.inf))
    for name, rect in (("centre cell", centre), ("upper quadrant", quadrant)):
        exact = float(_cell_weight(v, rect[0]) @ joint @ _cell_weight(v, rect[1]))
        limit = quad_cell(k, (0.5, 1.0), rect)
        gap = exact - limit
        sd = np.sqrt(limit * (1 - limit))
        print(f"n = {n:5d} {name:15s}: exact {exact:.5f}, limit {limit:.5f}, "
              f"gap x sqrt(n) = {gap * np.sqrt(n):+.3f}, expected z at paths = 20 n: "
              f"{gap / sd * np.sqrt(20 * n):+.2f}")
