"""The crossing chain, its invariant law and the skew parameter.

Run: python demos/02_crossing_chain.py

Positions at successive sign changes form a Markov chain.  Its invariant law
nu, paired with the two renewal functions, gives gamma.  The value does not
move with alpha and coincides with sigma / (sigma + sigma').
"""
import numpy as np

from oscwalk import make_pmf, reflect, solve_crossing_chain

mu = make_pmf({-1: 1 / 3, 0: 1 / 3, 1: 1 / 3})
mu_prime = make_pmf({-2: 0.25, 0: 0.25, 1: 0.5})

sol = solve_crossing_chain(mu, mu_prime, 0.5)
print("crossing kernel rows")
for x in (-2, -1, 0, 1, 2):
    print(f"  C({x:2d}, .) = { {y: round(p, 4) for y, p in sol.kernel.row(x).items()} }")
print("invariant law nu:", {int(x): round(sol.nu(x), 6) for x in sol.nu.support})

s, sp = np.sqrt(mu.variance), np.sqrt(mu_prime.variance)
for alpha in (0.0, 0.5, 1.0):
    g = solve_crossing_chain(mu, mu_prime, alpha).gamma
    print(f"alpha = {alpha:.1f}: gamma = {g:.12f}")
print(f"sigma / (sigma + sigma') = {s / (s + sp):.12f}")

print("\nmirror-image laws mu'(x) = mu(-x):",
      f"gamma = {solve_crossing_chain(mu_prime, reflect(mu_prime), 0.5).gamma:.12f}")
