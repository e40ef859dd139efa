from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from kwhcheck.markov import DivergenceError, check_absorbing, expected_visits, hitting_probability, solve


def test_solve_small_system():
    assert solve([[2, 1], [1, 3]], [3, 5]) == [F(4, 5), F(7, 5)]


def test_solve_needs_pivoting():
    assert solve([[0, 1], [1, 0]], [2, 3]) == [3, 2]


def test_singular():
    with pytest.raises(ZeroDivisionError):
        solve([[1, 2], [2, 4]], [1, 2])


def test_geometric_retry_matches_series():
    # stay with 2/3, leave with 1/3: the retry loop of the four-card protocol
    trans = {0: [(0, F(2, 3)), (1, F(1, 3))], 1: []}
    k = sympy.symbols("k", integer=True, positive=True)
    series = sympy.summation(k * sympy.Rational(1, 3) * sympy.Rational(2, 3) ** (k - 1), (k, 1, sympy.oo))
    assert expected_visits(trans, 0)[0] == F(str(series)) == 3


def test_hitting_probability():
    trans = {0: [(1, F(1, 2)), (2, F(1, 2))], 1: [(3, F(1))], 2: [], 3: []}
    assert hitting_probability(trans, 0, {1}) == F(1, 2)
    assert hitting_probability(trans, 0, {3}) == F(1, 2)
    assert hitting_probability(trans, 0, {0}) == 1


def test_trap_diverges():
    trans = {0: [(1, F(1, 2)), (2, F(1, 2))], 1: [(1, F(1))], 2: []}
    with pytest.raises(DivergenceError):
        check_absorbing(trans, 0)
    with pytest.raises(DivergenceError):
        expected_visits(trans, 0)


def test_unreachable_states_ignored():
    trans = {0: [(1, F(1))], 1: [], 2: [(2, F(1))]}
    check_absorbing(trans, 0)
    assert set(expected_visits(trans, 0)) == {0, 1}


@st.composite
def absorbing_chains(draw):
    n = draw(st.integers(1, 5))
    trans = {}
    for u in range(n):
        weights = draw(st.lists(st.integers(0, 4), min_size=n + 1, max_size=n + 1))
        weights[n] += 1  # every transient state can leave directly
        total = sum(weights)
        trans[u] = [(v, F(w, total)) for v, w in enumerate(weights) if w]
    trans[n] = []
    return n, trans


@settings(max_examples=60, deadline=None)
@given(absorbing_chains())
def test_fundamental_matrix(chain):
    n, trans = chain
    q = sympy.zeros(n, n)
    for u in range(n):
        for v, p in trans[u]:
            if v < n:
                q[u, v] += sympy.Rational(p.numerator, p.denominator)
    fundamental = (sympy.eye(n) - q).inv()
    visits = expected_visits(trans, 0)
    for v in range(n):
        if v in visits:
            assert visits[v] == F(str(fundamental[0, v]))
