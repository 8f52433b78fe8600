"""Acceptance suite: twelve end-to-end criteria at their stated tolerances.

Each test records one PASS/FAIL line (value, tolerance, runtime against its
budget) that is printed in the terminal summary, then asserts.
"""
import itertools
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record_acceptance
from oracles import enumerate_killed_many
from oscwalk.crossing import solve_crossing_chain
from oscwalk.fluctuation import (
    bridge_probability,
    build_killed_table,
    entrance_law,
    killed_dp,
    ladder_law,
    verify_upper_bounds,
)
from oscwalk.lattice import make_pmf, reflect
from oscwalk.operators import (
    WeightedNorm,
    build_cn,
    build_hn,
    kernel_sum_check,
    tail_sequence,
    verify_gouezel_limit,
    weighted_row_norm,
)
from oscwalk.renewal import limit_constants, potential
from oscwalk.simulate import (
    WalkConfig,
    crossing_occupation,
    mc_samples,
    sample_excursion_bridge,
    sample_meander,
)
from oscwalk.skewbm import (
    SkewKernel,
    excursion_bridge_cdf,
    heat_kernel,
    marginal_cdf,
    meander_cdf,
)
from oscwalk.stats import EmpiricalDistribution, dkw_band, ks_distance, total_variation

WORKERS = os.cpu_count() or 1

MU = make_pmf({-1: Fraction(1, 3), 0: Fraction(1, 3), 1: Fraction(1, 3)})
MU_PRIME = make_pmf({-2: Fraction(1, 4), 0: Fraction(1, 4), 1: Fraction(1, 2)})


class Clock:
    def __init__(self, budget_s):
        self.budget = budget_s
        self.t0 = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0

    @property
    def ok(self):
        return self.elapsed < self.budget

    def __str__(self):
        return f"{self.elapsed:.1f}s / {self.budget:g}s"


def report(number, checks, clock, detail):
    """``checks`` is a list of booleans; the runtime budget is one more."""
    passed = all(checks) and clock.ok
    record_acceptance(number, passed, f"{detail}  [{clock}]")
    return passed


@pytest.fixture(scope="module")
def solution():
    return solve_crossing_chain(MU, MU_PRIME, 0.5, M=64)


@pytest.fixture(scope="module")
def operators():
    t0 = time.perf_counter()
    seq = build_hn(build_cn(MU, MU_PRIME, 0.5, M=64, N=4096))
    seq.build_seconds = time.perf_counter() - t0
    return seq


@pytest.fixture(scope="module")
def walk_samples():
    """Marginal run at the scale fixed by criterion 8."""
    cfg = WalkConfig(MU, MU_PRIME, 0.5, seed=20240)
    t0 = time.perf_counter()
    values = mc_samples(cfg, 5000, [1.0], 200_000, WORKERS)
    return values, time.perf_counter() - t0, cfg


# The two-time law of the walk differs from the limit by a deterministic
# O(n^-1/2) term; in the centre cell it is -0.22/sqrt(n) (exact transition
# matrix powers, demos/06_finite_n_bias.py), i.e. an expected z of about
# -0.51 sqrt(paths / n).  paths / n = 5 keeps that near -1.1.
FDD_N, FDD_PATHS = 20_000, 100_000


def _small_support_pmfs():
    """Every support of range <= 2 with minimum in [-3, 1], with fixed random weights."""
    rng = np.random.default_rng(7)
    out = []
    for lo in range(-3, 2):
        for size in (1, 2, 3):
            for sub in itertools.combinations(range(lo, lo + 3), size):
                if min(sub) != lo:
                    continue
                w = rng.integers(1, 10, size=len(sub))
                out.append(make_pmf({s: Fraction(int(v), int(w.sum())) for s, v in zip(sub, w)}))
    return out


def test_criterion_01_exact_oracle():
    clock = Clock(10)
    pairs = [(x, side) for x in (1, 2, 3) for side in ("negative", "positive")]
    worst, cases = 0.0, 0
    for pmf in _small_support_pmfs():
        ref = enumerate_killed_many(pmf.support, pmf.probs, pairs, 12)
        for x, side in pairs:
            surv, exits, alive = ref[(x, side)]
            tab = build_killed_table(pmf, x, side, 12, depth_tol=1e-15)
            worst = max(worst, np.max(np.abs(tab.survival - surv)))
            sign = -1 if side == "negative" else 1
            for k in range(1, 13):
                got = entrance_law(tab, k)
                for s in set(got) | set(exits[k]):
                    worst = max(worst, abs(got.get(s, 0.0) - exits[k].get(s, 0.0)))
                for s, p in alive[k].items():
                    worst = max(worst, abs(bridge_probability(tab, k, sign * s) - p))
                # nothing alive where enumeration has nothing
                listed = sum(bridge_probability(tab, k, y) for y in range(1, x + 2 * 3 * k + 1))
                worst = max(worst, abs(listed - surv[k]))
            cases += 1
    ok = report(1, [worst <= 1e-12], clock, f"max |DP - enumeration| = {worst:.2e} over {cases} cases (tol 1e-12)")
    assert ok


def test_criterion_02_gamma_special_cases():
    clock = Clock(30)
    g_eq = solve_crossing_chain(MU_PRIME, MU_PRIME, 0.5, M=64).gamma
    g_anti = solve_crossing_chain(MU_PRIME, reflect(MU_PRIME), 0.5, M=64).gamma
    eq_ok = abs(g_eq - 0.5) <= 1e-9
    anti_ok = abs(g_anti - 1.0) <= 1e-6
    ok = report(
        2, [eq_ok, anti_ok], clock,
        f"equal laws gamma = {g_eq:.12f} (0.5 +- 1e-9: {'ok' if eq_ok else 'no'}); "
        f"antisymmetric gamma = {g_anti:.12f} (1 +- 1e-6: {'ok' if anti_ok else 'no'})",
    )
    assert ok


def test_criterion_03_alpha_independence():
    clock = Clock(60)
    g0 = solve_crossing_chain(MU, MU_PRIME, 0.0, M=64).gamma
    g1 = solve_crossing_chain(MU, MU_PRIME, 1.0, M=64).gamma
    d = abs(g0 - g1)
    ok = report(3, [d <= 1e-9], clock, f"|gamma(0) - gamma(1)| = {d:.2e} (tol 1e-9), gamma = {g0:.10f}")
    assert ok


def test_criterion_04_survival_asymptotics():
    clock = Clock(120)
    n = 10_000
    consts = limit_constants(MU, MU_PRIME)
    sides = {
        "negative": (MU, ladder_law(MU, "ascending"), consts.c),
        "positive": (MU_PRIME, ladder_law(MU_PRIME, "descending"), consts.c_prime),
    }
    ratio_err, abs_err = 0.0, {"half_open": 0.0, "closed": 0.0}
    for side, (pmf, lad, c) in sides.items():
        s = {x: build_killed_table(pmf, x, side, n, keep_alive=False).survival[-1] for x in (1, 2, 3)}
        for conv in abs_err:
            table = potential(lad, 8, conv)
            if conv == "half_open":
                ratio_err = max(ratio_err, abs((s[2] / s[1]) / (table.h(2) / table.h(1)) - 1))
            for x in (1, 2, 3):
                abs_err[conv] = max(abs_err[conv], abs(np.sqrt(n) * s[x] / (2 * c * table.h(x)) - 1))
    matching = [conv for conv, e in abs_err.items() if e <= 0.03]
    ok = report(
        4, [ratio_err <= 0.02, matching == ["half_open"]], clock,
        f"ratio err {ratio_err:.4f} (tol 0.02); absolute err half_open {abs_err['half_open']:.4f}, "
        f"closed {abs_err['closed']:.4f} (tol 0.03) -> convention {matching}",
    )
    assert ok


def test_criterion_05_flatness(operators):
    clock = Clock(300)
    clock.t0 -= operators.build_seconds
    rep = verify_upper_bounds(MU, 3, 4000)
    exit_var = rep.variation("exit_stat", 2000, 4000)
    rep_p = verify_upper_bounds(MU_PRIME, 3, 4000, side="positive")
    exit_var = max(exit_var, rep_p.variation("exit_stat", 2000, 4000))
    norm = WeightedNorm(0.5)
    ns = np.arange(50, 501)
    wn = np.array([n**1.5 * weighted_row_norm(operators.C(int(n)), norm) for n in ns])
    norm_var = float((wn.max() - wn.min()) / wn.max())
    ok = report(
        5, [exit_var < 0.10, norm_var < 0.10], clock,
        f"exit-time variation {exit_var:.4f}, operator-norm variation {norm_var:.4f} (tol 0.10)",
    )
    assert ok


def test_criterion_06_tail_of_r(operators, solution):
    clock = Clock(300)
    clock.t0 -= operators.build_seconds
    n = 4000
    tail = tail_sequence(operators, solution.nu)
    stat = np.sqrt(n) * tail[n]
    err = abs(stat / solution.tail_constant - 1)
    ok = report(6, [err <= 0.05], clock,
                f"sqrt(n) tail = {stat:.5f} vs {solution.tail_constant:.5f}, rel err {err:.4f} (tol 0.05)")
    assert ok


def test_criterion_07_renewal_limit(operators, solution):
    clock = Clock(900)
    clock.t0 -= operators.build_seconds
    rep = verify_gouezel_limit(operators, solution, [2048], core=4)
    shape, rel = rep.shape_error[0], rep.relative_error[0]
    ok = report(7, [shape <= 0.03, rel <= 0.10], clock,
                f"shape err {shape:.4f} (tol 0.03), absolute err {rel:.4f} (tol 0.10)")
    assert ok


def test_criterion_08_marginal(walk_samples, solution):
    values, sim_time, cfg = walk_samples
    clock = Clock(600)
    clock.t0 -= sim_time
    k = SkewKernel(solution.gamma)
    emp = EmpiricalDistribution.from_sample(values[:, 0])
    ks = ks_distance(emp, lambda q: marginal_cdf(k, 1.0, 0.0, q))
    band = dkw_band(emp.n, 0.99) + 1 / (min(cfg.sigma, cfg.sigma_prime) * np.sqrt(5000))
    ok = report(8, [ks <= 0.015], clock,
                f"KS = {ks:.5f} (tol 0.015; DKW99 + lattice = {band:.5f}), gamma = {solution.gamma:.6f}")
    assert ok


def test_criterion_09_two_time(solution):
    from oscwalk.cli import fdd_cells

    clock = Clock(900)
    cfg = WalkConfig(MU, MU_PRIME, 0.5, seed=20241)
    values = mc_samples(cfg, FDD_N, [0.5, 1.0], FDD_PATHS, WORKERS)
    cells = fdd_cells(values, SkewKernel(solution.gamma), (0.5, 1.0),
                      lattice=(FDD_N, cfg.sigma, cfg.sigma_prime))
    zs = [c["z"] for c in cells]
    zmax = max(abs(z) for z in zs)
    ok = report(9, [zmax <= 3, len(cells) == 13], clock,
                f"max |z| = {zmax:.2f} over 4 quadrants + 3x3 grid (tol 3), n = {FDD_N}, "
                f"{FDD_PATHS} paths; quadrant z = {', '.join(f'{z:+.2f}' for z in zs[:4])}")
    assert ok


def test_criterion_10_conditional_limits():
    clock = Clock(600)
    mea = sample_meander(MU_PRIME, 1, 5000, 1.0, 100_000, seed=31)
    ks_m = ks_distance(EmpiricalDistribution.from_sample(mea), lambda u: meander_cdf(1.0, u))
    bri = sample_excursion_bridge(MU_PRIME, 1, 1, 4000, 0.5, 100_000, seed=32)
    ks_b = ks_distance(EmpiricalDistribution.from_sample(bri), lambda u: excursion_bridge_cdf(0.5, 1.0, u))
    ok = report(10, [ks_m <= 0.02, ks_b <= 0.03], clock,
                f"meander KS = {ks_m:.5f} (tol 0.02), excursion bridge KS = {ks_b:.5f} (tol 0.03)")
    assert ok


def test_criterion_11_cross_module(operators, solution):
    clock = Clock(600)
    clock.t0 -= operators.build_seconds
    ks = kernel_sum_check(operators, solution)
    occ = crossing_occupation(WalkConfig(MU, MU_PRIME, 0.5, seed=99), chains=20_000, per_chain=50,
                              burn_in=10, workers=WORKERS)
    nu = {int(x): float(p) for x, p in zip(solution.nu.sites, solution.nu.weights) if p > 0}
    tv = total_variation(occ.frequencies, nu)
    ok = report(
        11, [ks["max_error"] <= 1e-8, tv <= 0.01], clock,
        f"max |sum C_n - C| = {ks['max_error']:.2e} (tol 1e-8); occupation TV = {tv:.4f} (tol 0.01, "
        f"{occ.samples} samples, {occ.restarts} restarts)",
    )
    assert ok


def test_criterion_12_properties():
    clock = Clock(600)
    rng = np.random.default_rng(12)
    failures = []

    # mass conservation of the killed walk
    for _ in range(40):
        sites = np.sort(rng.choice(np.arange(-3, 4), size=rng.integers(2, 5), replace=False))
        w = rng.integers(1, 10, size=len(sites))
        pmf = make_pmf({int(s): Fraction(int(v), int(w.sum())) for s, v in zip(sites, w)})
        res = killed_dp(pmf, [1, 2, 5], 200, 1e-14)
        bal = res.survival + np.cumsum(res.absorbed.sum(axis=2), axis=1) + res.truncated
        if np.max(np.abs(bal - 1)) > 1e-12:
            failures.append("mass conservation")

    # renewal identity U = delta_0 + mu_+ * U
    for pmf in (MU, MU_PRIME, make_pmf({-1: Fraction(2, 3), 2: Fraction(1, 3)})):
        for side in ("ascending", "descending"):
            lad = ladder_law(pmf, side)
            U = potential(lad, 80).values
            h = np.zeros(81)
            for s, p in lad.magnitudes:
                h[s] = p
            rhs = np.convolve(h, U)[:81]
            rhs[0] += 1
            if np.max(np.abs(U - rhs)) > 1e-12:
                failures.append("renewal identity")

    # semigroup identity and normalization of p^gamma
    from scipy import integrate

    def q(f):
        return integrate.quad(f, -np.inf, 0, epsabs=1e-12)[0] + integrate.quad(f, 0, np.inf, epsabs=1e-12)[0]

    for g, s, t, x, y in rng.uniform([0, 0.1, 0.1, -2, -2], [1, 1.5, 1.5, 2, 2], size=(10, 5)):
        k = SkewKernel(g)
        lhs = q(lambda z: heat_kernel(k, s, x, z) * heat_kernel(k, t, z, y))
        if abs(lhs - heat_kernel(k, s + t, x, y)) > 1e-8:
            failures.append("semigroup")
        if abs(q(lambda z: heat_kernel(k, t, x, z)) - 1) > 1e-8:
            failures.append("normalization p^gamma")

    # the limit densities
    from oscwalk.skewbm import excursion_bridge_density, meander_density

    if abs(integrate.quad(lambda u: meander_density(1.0, u), 0, np.inf)[0] - 1) > 1e-9:
        failures.append("normalization meander")
    if abs(integrate.quad(lambda u: excursion_bridge_density(0.4, 1.0, u), 0, np.inf)[0] - 1) > 1e-9:
        failures.append("normalization excursion")

    # determinism under worker-count changes
    cfg = WalkConfig(MU, MU_PRIME, 0.5, seed=5)
    a = mc_samples(cfg, 300, [0.5, 1.0], 10_000, workers=1)
    b = mc_samples(cfg, 300, [0.5, 1.0], 10_000, workers=3)
    if not np.array_equal(a, b):
        failures.append("worker determinism")

    ok = report(12, [not failures], clock,
                "all invariants hold" if not failures else f"violated: {sorted(set(failures))}")
    assert ok
