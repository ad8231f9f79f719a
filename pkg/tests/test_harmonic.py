import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coalpp.errors import InvalidParameter
from coalpp.harmonic import HarmonicCache, floor_power, fn_cdf, harmonic, hstar


def exact_harmonic(n, b=1):
    return sum(Fraction(1, k**b) for k in range(1, n + 1))


@pytest.mark.parametrize("n,b,expected", [
    (0, 1, 0.0),
    (3, 1, 11 / 6),
    (2, 2, 1.25),
    (10, 3, float(exact_harmonic(10, 3))),
])
def test_harmonic_values(n, b, expected):
    assert harmonic(n, b) == pytest.approx(expected, rel=1e-15, abs=0)


@pytest.mark.parametrize("n,expected", [(0, 0.0), (1, 0.0), (3, 5 / 6)])
def test_hstar_values(n, expected):
    assert hstar(n) == pytest.approx(expected, rel=1e-15, abs=0)


def test_fn_cdf_examples():
    assert fn_cdf(100, 0) == 0.0
    # floor(100 ** 0.5) is exactly 10
    assert fn_cdf(100, 0.5) == pytest.approx(0.3971554101373189, rel=1e-12)
    assert fn_cdf(100, 0.5) <= 0.5
    assert fn_cdf(10, 1) == pytest.approx(0.7943108202746378, rel=1e-12)
    assert fn_cdf(10, 1) <= 1


def test_fn_cdf_rejects_small_n():
    with pytest.raises(InvalidParameter):
        fn_cdf(1, 0.5)


@pytest.mark.parametrize("n,t,expected", [
    (100, 0.5, 10), (1000, 1 / 3, 10), (10, 2, 100), (10**5, 1, 10**5),
    (10**4, 0.25, 10), (7, 0, 1), (2, 0.999999, 1),
])
def test_floor_power_integral_powers(n, t, expected):
    assert floor_power(n, t) == expected


def test_cache_matches_reverse_summation():
    cache = HarmonicCache(10**6, 1)
    backwards = np.sum(1.0 / np.arange(10**6, 0, -1, dtype=np.float64))
    assert abs(cache[10**6] - backwards) < 1e-10
    cache2 = HarmonicCache(10**5, 2)
    backwards2 = np.sum(1.0 / np.arange(10**5, 0, -1, dtype=np.float64) ** 2)
    assert abs(cache2[10**5] - backwards2) < 1e-10


def test_cache_invariants():
    cache = HarmonicCache(5000, 1)
    v = cache.values
    assert np.all(np.diff(v) > 0)
    k = np.arange(1, 5001)
    assert np.allclose(np.diff(v), 1.0 / k, rtol=0, atol=4 * np.spacing(v[1:]))
    assert not v.flags.writeable


@given(st.integers(1, 5000))
def test_harmonic_minus_hstar_is_one(n):
    assert harmonic(n, 1) - hstar(n) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300)
@given(st.integers(2, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_fn_cdf_nondecreasing(n, a, b):
    s, t = sorted((a, b))
    assert fn_cdf(n, s) <= fn_cdf(n, t)


@settings(max_examples=500)
@given(st.integers(2, 10**6), st.floats(0, 1))
def test_fn_cdf_below_identity(n, t):
    assert fn_cdf(n, t) <= t + 1e-12


def test_fn_cdf_right_continuous_at_jumps():
    n = 50
    for m in range(2, n + 1):
        t = math.log(m) / math.log(n)
        assert fn_cdf(n, t) == fn_cdf(n, t + 1e-13)


def test_increment_bound_fails_just_below_a_jump():
    # F_n jumps by 1 / ((m - 1) log n) where n**t crosses m, so an interval
    # straddling the jump carries more mass than its length
    n = 10
    s = math.log10(2.99)
    t = math.log10(3.0)
    gain = (hstar(floor_power(n, t) - 1) - hstar(floor_power(n, s) - 1)) / math.log(n)
    assert gain == pytest.approx(0.5 / math.log(10))
    assert gain > t - s
