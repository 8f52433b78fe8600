from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscwalk.errors import NegativeProb, NotNormalized
from oscwalk.lattice import (
    check_hypotheses,
    convolve,
    is_strongly_aperiodic,
    make_pmf,
    mixture,
    moments,
    pmf_from_text,
    pmf_to_text,
    reflect,
    sample,
)


def test_make_pmf_sorts_and_merges():
    p = make_pmf([(2, 0.25), (-1, 0.5), (2, 0.25)])
    assert p.support.tolist() == [-1, 2]
    assert p.probs.tolist() == [0.5, 0.5]


def test_make_pmf_rejects_negative():
    with pytest.raises(NegativeProb):
        make_pmf({0: 1.2, 1: -0.2})


def test_make_pmf_rejects_unnormalized():
    with pytest.raises(NotNormalized):
        make_pmf({0: 0.5, 1: 0.4})


def test_make_pmf_strips_zero_sites():
    p = make_pmf({-1: 0.5, 0: 0.0, 1: 0.5})
    assert 0 not in p.support
    with pytest.raises(ValueError):
        make_pmf({-1: 0.5, 0: 0.0, 1: 0.5}, drop_zeros=False)


def test_exact_fractions_round_trip():
    p = make_pmf({-1: Fraction(1, 3), 0: Fraction(1, 3), 1: Fraction(1, 3)})
    assert p.probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert pmf_from_text(pmf_to_text(p, "uniform")) == p
    assert pmf_from_text("-1 1/2\n# comment\n1 1/2\n") == make_pmf({-1: 0.5, 1: 0.5})


def test_pmf_is_immutable(lazy3):
    with pytest.raises(ValueError):
        lazy3.probs[0] = 0.0


def test_moments(lazy3, skewed):
    m = moments(lazy3, [1, 3.5])
    assert m.mean == pytest.approx(0.0, abs=1e-15)
    assert m.variance == pytest.approx(2 / 3)
    assert m.abs_moment(1) == pytest.approx(2 / 3)
    assert moments(skewed).variance == pytest.approx(1.5)


@pytest.mark.parametrize(
    "entries, expected",
    [({-1: 0.5, 1: 0.5}, False), ({-1: 1 / 3, 0: 1 / 3, 1: 1 / 3}, True),
     ({-1: 2 / 3, 2: 1 / 3}, False), ({-2: 0.25, 0: 0.25, 1: 0.5}, True), ({3: 1.0}, False)],
)
def test_strong_aperiodicity(entries, expected):
    assert is_strongly_aperiodic(make_pmf(entries)) is expected


def test_hypotheses(lazy3, skewed, simple):
    rep = check_hypotheses(lazy3, skewed)
    assert rep.ok
    rep = check_hypotheses(simple, lazy3)
    assert rep.h2 and not rep.h3 and not rep.ok
    rep = check_hypotheses(make_pmf({-1: 0.4, 1: 0.6}), lazy3)
    assert not rep.h2


def test_sample_matches_law(skewed):
    rng = np.random.default_rng(3)
    x = sample(skewed, rng, 200_000)
    freq = [np.mean(x == s) for s in skewed.support]
    assert np.allclose(freq, skewed.probs, atol=0.005)


def test_mixture_and_reflect(lazy3, skewed):
    m = mixture(lazy3, skewed, 0.25)
    assert m.prob(-2) == pytest.approx(0.75 * 0.25)
    assert m.prob(1) == pytest.approx(0.25 / 3 + 0.75 * 0.5)
    r = reflect(skewed)
    assert r.as_dict() == {-1: 0.5, 0: 0.25, 2: 0.25}
    assert reflect(r) == skewed


pmf_entries = st.dictionaries(
    st.integers(-4, 4), st.integers(1, 20), min_size=1, max_size=6
).map(lambda d: make_pmf({k: Fraction(v, sum(d.values())) for k, v in d.items()}))


@settings(max_examples=60, deadline=None)
@given(pmf_entries, pmf_entries)
def test_convolution_mass_and_mean(a, b):
    c = convolve(a, b)
    assert c.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert c.mean == pytest.approx(a.mean + b.mean, abs=1e-9)
    assert c.variance == pytest.approx(a.variance + b.variance, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(pmf_entries)
def test_reflection_negates_mean(p):
    assert reflect(p).mean == pytest.approx(-p.mean, abs=1e-12)
    assert reflect(p).variance == pytest.approx(p.variance, abs=1e-12)
