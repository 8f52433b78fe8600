import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from oscwalk.stats import (
    EmpiricalDistribution,
    cell_test,
    dkw_band,
    ks_distance,
    ks_distance_discrete,
    total_variation,
)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=200))
def test_ks_matches_scipy(xs):
    emp = EmpiricalDistribution.from_sample(xs)
    ours = ks_distance(emp, sps.norm.cdf)
    ref = sps.kstest(xs, "norm", method="asymp").statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_empirical_cdf_right_continuous():
    emp = EmpiricalDistribution.from_sample([0, 1, 1, 2])
    assert emp.cdf(1.0) == 0.75
    assert emp.cdf(0.999) == 0.25
    assert emp.n == 4


def test_discrete_ks_limit():
    # a large sample from a lattice law approaches the discrete statistic
    sites = np.array([-1.0, 0.0, 1.0])
    probs = np.array([0.25, 0.5, 0.25])
    d = ks_distance_discrete(sites, probs, sps.norm.cdf)
    sample = np.repeat(sites, (probs * 4000).astype(int))
    assert ks_distance(EmpiricalDistribution.from_sample(sample), sps.norm.cdf) == pytest.approx(d, abs=1e-12)


def test_dkw_band():
    assert dkw_band(10_000, 0.99) == pytest.approx(np.sqrt(np.log(200) / 20000))
    assert np.isfinite(dkw_band(10, 1 - 1e-16))
    with pytest.raises(ValueError):
        dkw_band(0)


def test_dkw_coverage():
    rng = np.random.default_rng(0)
    eps = dkw_band(200, 0.9)
    reps = 1000
    misses = sum(
        ks_distance(EmpiricalDistribution.from_sample(rng.random(200)), lambda x: np.clip(x, 0, 1)) > eps
        for _ in range(reps)
    )
    # the band is conservative; allow three binomial standard deviations
    assert misses / reps <= 0.1 + 3 * np.sqrt(0.09 / reps)


def test_cell_test():
    assert cell_test(50, 100, 0.5) == 0.0
    assert cell_test(60, 100, 0.5) == pytest.approx(2.0)
    assert cell_test(0, 10, 0.0) == 0.0
    assert cell_test(1, 10, 0.0) == np.inf
    with pytest.raises(ValueError):
        cell_test(1, 10, 1.5)


def test_total_variation():
    assert total_variation({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0.0
    assert total_variation({0: 1.0}, {1: 1.0}) == 1.0
    assert total_variation({0: 0.6, 1: 0.4}, {0: 0.5, 2: 0.5}) == pytest.approx(0.5)
