from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import potential_by_convolution
from oscwalk.errors import OutOfTable
from oscwalk.fluctuation import LadderLaw, build_killed_table, ladder_law
from oscwalk.lattice import make_pmf
from oscwalk.renewal import check_growth, limit_constants, potential, renewal_function


def test_potential_matches_convolution(jumpy, skewed):
    for pmf, side in ((jumpy, "ascending"), (skewed, "descending"), (jumpy, "descending")):
        law = ladder_law(pmf, side)
        table = potential(law, 40)
        ref = potential_by_convolution(law.magnitudes.as_dict(), 40)
        assert np.max(np.abs(table.values - ref)) < 1e-12


def test_potential_small_values(jumpy):
    U = potential(ladder_law(jumpy, "ascending"), 8).values
    # heights uniform on {1, 2}: U = 1, 1/2, 3/4, 5/8, ...
    assert U[:4] == pytest.approx([1, 0.5, 0.75, 0.625], abs=1e-12)
    assert U[-1] == pytest.approx(2 / 3, abs=1e-2)


def test_conventions(simple, jumpy):
    t = potential(ladder_law(simple, "ascending"), 10)
    assert renewal_function(t, 5) == pytest.approx(5.0)
    assert renewal_function(t.with_convention("closed"), 5) == pytest.approx(6.0)
    assert renewal_function(t, -1) == 0.0
    assert renewal_function(t, 0) == 0.0
    tj = potential(ladder_law(jumpy, "ascending"), 10, convention="closed")
    assert renewal_function(tj, 2) == pytest.approx(2.25)
    with pytest.raises(OutOfTable):
        renewal_function(t, 11)


def test_half_open_matches_simple_walk_asymptotics(simple):
    # sqrt(n) P[tau(-x) > n] -> 2 c h(x) with c = 1/sqrt(2 pi) for the +-1 walk;
    # the exact survival pins h(x) = x, i.e. the half-open convention
    n = 20000
    lc = limit_constants(simple, simple)
    t = potential(ladder_law(simple, "ascending"), 8)
    for x in (1, 2, 3):
        s = build_killed_table(simple, x, "negative", n, keep_alive=False).survival[-1]
        assert np.sqrt(n) * s == pytest.approx(2 * lc.c * t.h(x), rel=2e-3)
        assert abs(np.sqrt(n) * s - 2 * lc.c * t.with_convention("closed").h(x)) > 0.1


def test_limit_constants_three_point(skewed):
    lc = limit_constants(skewed, skewed)
    # ascending heights are 1 a.s. for the upward skip-free law
    assert lc.mean_ascending == pytest.approx(1.0)
    assert lc.c == pytest.approx(1 / np.sqrt(1.5 * 2 * np.pi))


def test_growth(skewed, jumpy):
    rep = check_growth(potential(ladder_law(skewed, "descending"), 400))
    assert rep.ok and rep.monotone
    rep = check_growth(potential(ladder_law(jumpy, "ascending"), 400))
    assert rep.ratio_at_max == pytest.approx(2 / 3, rel=0.01)


height_laws = st.lists(st.integers(1, 9), min_size=1, max_size=5).map(
    lambda w: {i + 1: Fraction(v, sum(w)) for i, v in enumerate(w) if v}
)


@settings(max_examples=50, deadline=None)
@given(height_laws)
def test_renewal_identity_property(law):
    # U = delta_0 + mu_+ * U, checked independently of the recursion
    pmf = make_pmf(law)
    ladder = LadderLaw("ascending", pmf, np.ones(1), pmf.mean, 0.0, "wiener-hopf")
    U = potential(ladder, 60).values
    conv = np.convolve(_dense(pmf, 60), U)[:61]
    rhs = conv.copy()
    rhs[0] += 1.0
    assert np.max(np.abs(U - rhs)) < 1e-12
    assert np.max(np.abs(U - potential_by_convolution(law, 60))) < 1e-12


def _dense(pmf, t_max):
    v = np.zeros(t_max + 1)
    for s, p in pmf.as_dict().items():
        v[s] = p
    return v
