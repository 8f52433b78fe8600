"""Exact first-passage laws of a one-sided walk and the renewal function.

Run: python demos/01_first_passage.py

The killed-walk DP gives P[tau(-x) > n] exactly.  Its sqrt(n) tail singles
out which reading of the renewal function h matches, here for the +-1 walk
and for a skewed three-point law.
"""
import numpy as np

from oscwalk import build_killed_table, ladder_law, limit_constants, make_pmf, potential

simple = make_pmf({-1: 0.5, 1: 0.5})
skewed = make_pmf({-1: 0.5, 0: 0.25, 2: 0.25})

print("P[tau(-1) > n] for the +-1 walk, n = 0..6")
print(np.round(build_killed_table(simple, 1, "negative", 6).survival, 6))

n = 20_000
for name, pmf in (("+-1 walk", simple), ("{-1, 0, 2} walk", skewed)):
    lad = ladder_law(pmf, "ascending")
    c = limit_constants(pmf, pmf).c
    print(f"\n{name}: ascending ladder heights {lad.height_pmf.as_dict()}")
    for conv in ("half_open", "closed"):
        U = potential(lad, 8, conv)
        errs = []
        for x in (1, 2, 3):
            s = build_killed_table(pmf, x, "negative", n, keep_alive=False).survival[-1]
            errs.append(np.sqrt(n) * s / (2 * c * U.h(x)) - 1)
        print(f"  {conv:9s}: sqrt(n) P[tau(-x)>n] / (2 c h(x)) - 1 = {np.round(errs, 4)}")
