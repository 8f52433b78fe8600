import numpy as np
import pytest

from oracles import crossing_time_laws
from oscwalk.crossing import solve_crossing_chain
from oscwalk.operators import (
    WeightedNorm,
    build_cn,
    build_hn,
    dense_hn,
    kernel_sum_check,
    rn_sequence,
    tail_sequence,
    weighted_row_norm,
)

M, N = 12, 400


@pytest.fixture(scope="module")
def seq(lazy3, skewed):
    return build_hn(build_cn(lazy3, skewed, 0.5, M=M, N=N))


@pytest.fixture(scope="module")
def sol(lazy3, skewed):
    return solve_crossing_chain(lazy3, skewed, 0.5, M=M)


@pytest.mark.parametrize("x", [-3, -1, 0, 1, 2])
def test_cn_hn_against_position_recursion(seq, lazy3, skewed, x):
    C_ref, H_ref = crossing_time_laws(lazy3, skewed, 0.5, x, 10)
    for n in range(1, 11):
        Cn, Hn = seq.C(n)[x + M], seq.H(n)[x + M]
        for y in range(-M, M + 1):
            assert Cn[y + M] == pytest.approx(C_ref[n].get(y, 0.0), abs=1e-14)
            assert Hn[y + M] == pytest.approx(H_ref[n].get(y, 0.0), abs=1e-14)


def test_block_recursion_matches_dense(seq):
    n_max = 40
    C_mats = np.stack([seq.C(n) for n in range(n_max + 1)])
    H = dense_hn(C_mats)
    for n in (1, 2, 7, 40):
        assert np.max(np.abs(H[n] - seq.H(n))) < 1e-14


def test_renewal_identity(seq):
    # H_n = sum_j C_j H_{n-j}
    n = 60
    Hs = [seq.H(k) for k in range(n + 1)]
    rhs = sum(seq.C(j) @ Hs[n - j] for j in range(1, n + 1))
    assert np.max(np.abs(Hs[n] - rhs)) < 1e-10


def test_structure(seq):
    # from 0 every crossing happens after one step
    for n in range(2, 6):
        assert np.all(seq.C(n)[M] == 0)
    assert seq.C(1)[M].sum() == pytest.approx(1.0)
    assert np.allclose(seq.H(0), np.eye(2 * M + 1))
    # rows below 0 land on [0, M], rows above on [-M, 0]
    S = seq.C_sum()
    assert np.all(S[:M, :M] == 0)
    assert np.all(S[M + 1 :, M + 1 :] == 0)
    assert np.all(seq.C_blocks >= 0)


def test_kernel_sum(seq, sol):
    rep = kernel_sum_check(seq, sol)
    assert rep["max_error"] < 1e-8
    assert rep["partial_sum_below_kernel"]
    assert rep["gap_within_survival"]
    # the raw partial sum is far less accurate: the remainder matters
    assert rep["max_error_truncated_sum"] > 1e-4


def test_tail_and_rn_consistent(seq, sol):
    r = rn_sequence(seq, sol.nu)
    tail = tail_sequence(seq, sol.nu)
    assert r[0] == 0
    # tail[n-1] - tail[n] = r_n
    assert np.max(np.abs(tail[:-1] - tail[1:] - r[1:])) < 1e-12
    assert tail[0] == pytest.approx(1.0)


def test_weighted_norm():
    A = np.zeros((5, 5))
    A[0, 4] = 1.0
    norm = WeightedNorm(0.5)
    w = norm.weight(np.arange(-2, 3))
    assert weighted_row_norm(A, norm) == pytest.approx(w[4] / w[0])
    assert weighted_row_norm(np.eye(5), norm) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        WeightedNorm(0.0)


def test_alpha_validation(lazy3):
    with pytest.raises(ValueError):
        build_cn(lazy3, lazy3, 1.5, M=4, N=4)
