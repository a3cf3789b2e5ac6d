import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rrzf.selection import (SelectionParams, correlation, correlation_matrix,
                            sus_from_correlations, sus_select)
from rrzf.verify import literal_sus

from conftest import cn


def test_correlation_examples():
    assert correlation([1, 2j], [1, 2j]) == pytest.approx(1.0)
    assert correlation([1, 0], [0, 1]) == 0.0
    assert correlation([1, 0], np.array([1, 1]) / np.sqrt(2)) == pytest.approx(0.70710678)
    with pytest.raises(ValueError):
        correlation([0, 0], [1, 0])


def test_square_system_keeps_everyone_by_norm():
    h = np.diag([1.0, 3.0, 2.0]) + 0.1
    res = sus_select(h, SelectionParams(1.0, 3))
    assert res.order == (1, 2, 0)
    assert not res.pool_exhausted


def test_orthogonal_users():
    h = np.array([[3.0, 0, 0], [0, 2.0, 0], [0, 0, 1.0]])
    res = sus_select(h, SelectionParams(0.5, 2))
    assert res.order == (0, 1)


def test_pool_exhaustion():
    h = np.array([[2.0, 0.1], [1.0, 0.05]])
    res = sus_select(h, SelectionParams(0.5, 2))
    assert res.order == (0,)
    assert res.pool_exhausted and res.n == 1


def test_zero_rows_never_selected():
    h = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.5]])
    assert sus_select(h, SelectionParams(1.0, 2)).order == (1, 3)
    assert sus_select(np.zeros((3, 2)), SelectionParams(1.0, 2)).order == ()


def test_ties_go_to_lowest_index():
    h = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    assert sus_select(h, SelectionParams(1.0, 2)).order == (0, 1)


def test_params_validation():
    with pytest.raises(ValueError):
        SelectionParams(1.5, 2)
    with pytest.raises(ValueError):
        SelectionParams(0.5, 0)


def test_correlation_matrix_symmetric(rng):
    norms, corr = correlation_matrix(cn(rng, 6, 3))
    np.testing.assert_allclose(corr, corr.T)
    np.testing.assert_allclose(np.diag(corr), 1.0)
    assert np.all((corr >= 0) & (corr <= 1))


def test_matches_literal_transcription(rng):
    for _ in range(300):
        m = int(rng.integers(1, 5))
        k = int(rng.integers(m, 9))
        beta = float(rng.uniform())
        h = cn(rng, k, m)
        assert list(sus_select(h, SelectionParams(beta, m)).order) == literal_sus(h, beta, m)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 6), st.floats(0.0, 1.0), st.integers(0, 2 ** 32 - 1))
def test_selection_invariants(m, extra, beta, seed):
    rng = np.random.default_rng(seed)
    h = cn(rng, m + extra, m)
    norms, corr = correlation_matrix(h)
    order = sus_from_correlations(norms, corr, beta, m).order
    assert 1 <= len(order) <= m
    assert len(set(order)) == len(order)
    # Every pair of picks is semiorthogonal.
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            assert corr[a, b] < beta
    # Greedy: each pick has the largest norm among the users still eligible.
    for i, pick in enumerate(order):
        eligible = [k for k in range(len(norms)) if k not in order[:i]
                    and all(corr[j, k] < beta for j in order[:i])]
        assert norms[pick] == max(norms[k] for k in eligible)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 6), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.integers(0, 2 ** 32 - 1))
def test_larger_threshold_admits_no_fewer_candidates(m, extra, b1, b2, seed):
    lo, hi = sorted((b1, b2))
    h = cn(np.random.default_rng(seed), m + extra, m)
    norms, corr = correlation_matrix(h)
    first = int(np.argmax(norms))
    pool_lo = set(np.flatnonzero(corr[first] < lo))
    pool_hi = set(np.flatnonzero(corr[first] < hi))
    assert pool_lo <= pool_hi
    # Same first pick regardless of beta.
    assert sus_from_correlations(norms, corr, lo, m).order[0] == first
    assert sus_from_correlations(norms, corr, hi, m).order[0] == first
