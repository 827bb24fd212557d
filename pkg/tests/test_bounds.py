from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedshuffle.bounds import (
    TradeoffPoint,
    combined_lower_bound,
    lower_bound_cutset,
    lower_bound_excess_k3,
    opt_rate,
    opt_rate_k2,
    opt_rate_k3,
)


@pytest.mark.parametrize("n, s, r", [(4, 2, 2), (4, 4, 0), (6, 4, 2)])
def test_opt_rate_k2(n, s, r):
    assert opt_rate_k2(n, s) == r


@pytest.mark.parametrize("n, s, r", [(3, 2, Fraction(1, 2)), (3, 1, 2), (6, 3, Fraction(5, 2)), (6, 5, Fraction(1, 2))])
def test_opt_rate_k3(n, s, r):
    assert opt_rate_k3(n, s) == r


@pytest.mark.parametrize("fn, args", [(opt_rate_k2, (4, 1)), (opt_rate_k2, (4, 5)), (opt_rate_k3, (6, 1)), (lower_bound_excess_k3, (3, 4))])
def test_out_of_range(fn, args):
    with pytest.raises(ValueError):
        fn(*args)


def test_float_storage_is_refused():
    with pytest.raises(TypeError):
        opt_rate_k3(3, 1.5)


def test_cutset_examples():
    assert lower_bound_cutset(2, 4, 2) == 2
    assert lower_bound_cutset(3, 3, 3) == 0
    assert lower_bound_cutset(3, 6, 4) == 1
    with pytest.raises(ValueError):
        lower_bound_cutset(4, 8, 4)


def test_excess_bound_examples():
    assert lower_bound_excess_k3(3, 1) == 2
    assert lower_bound_excess_k3(3, 2) == Fraction(1, 2)
    assert lower_bound_excess_k3(3, 3) == -1  # 21/6 - 9/2
    assert combined_lower_bound(3, 3, 3) == 0


def storage_in_range(k):
    # S = N/K + (N - N/K) * u for N a multiple of 6 and rational u in [0, 1]
    return st.tuples(
        st.integers(1, 5).map(lambda m: 6 * m),
        st.fractions(min_value=0, max_value=1, max_denominator=60),
    ).map(lambda t: (t[0], Fraction(t[0], k) + (t[0] - Fraction(t[0], k)) * t[1]))


@given(storage_in_range(2))
def test_bounds_tight_k2(ns):
    n, s = ns
    assert combined_lower_bound(2, n, s) == opt_rate(2, n, s)


@given(storage_in_range(3))
def test_bounds_tight_k3(ns):
    n, s = ns
    assert combined_lower_bound(3, n, s) == opt_rate(3, n, s)


@given(storage_in_range(3), storage_in_range(3), st.fractions(0, 1, max_denominator=20))
def test_opt_rate_k3_convex(a, b, lam):
    n = a[0]
    s1 = a[1]
    s2 = Fraction(n, 3) + (b[1] - Fraction(b[0], 3)) * n / b[0]  # rescale b onto the same N
    mix = lam * s1 + (1 - lam) * s2
    assert opt_rate_k3(n, mix) <= lam * opt_rate_k3(n, s1) + (1 - lam) * opt_rate_k3(n, s2)


def test_opt_rate_k3_breakpoint():
    n = 6
    left = opt_rate_k3(n, Fraction(3)) - opt_rate_k3(n, Fraction(4))
    right = opt_rate_k3(n, Fraction(4)) - opt_rate_k3(n, Fraction(5))
    assert left == Fraction(3, 2) and right == Fraction(1, 2)


def test_tradeoff_point_range():
    TradeoffPoint(3, 6, Fraction(2), Fraction(4))
    with pytest.raises(ValueError):
        TradeoffPoint(3, 6, Fraction(1), Fraction(4))
