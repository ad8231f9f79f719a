import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coalpp.coupling import build_context, pi_union
from coalpp.errors import InvalidParameter
from coalpp.geometry import Rect, corner, validate_union
from coalpp.moments import (
    conditional_void_probability,
    exact_mean_union,
    limit_mean,
    limit_void_probability,
    mean_delta,
    mean_delta_bound,
    mean_k,
    mean_s,
    moment_report,
    prob_delta_positive,
    rescale,
    var_s,
    var_s_minus_k,
    void_probability_exact,
)

DECADES = [10**2, 10**3, 10**4, 10**5, 10**6]


def test_mean_s_examples():
    assert mean_s(1000, (1.0, 0.0)) == 0.0
    assert mean_s(16, (1.0, 0.5)) == pytest.approx(11 / 6, rel=1e-14)


def test_var_s_examples():
    assert var_s(100, (0.0, 1.0)) == 0.0
    assert var_s(100, (1.0, 1.0)) == pytest.approx(6.812261417824513, rel=1e-13)


def test_mean_k_examples():
    assert mean_k(1000, (1.0, 0.0)) == 1.0
    assert mean_k(9, (1.0, 0.5)) == pytest.approx(11 / 6, rel=1e-14)
    assert mean_k(100, (math.inf, 0.5)) == 10.0
    assert mean_k(100, (1e9, 0.5)) == pytest.approx(10.0, rel=1e-7)


def test_var_s_minus_k_examples():
    assert var_s_minus_k(100, (0.0, 1.0)) == 0.0
    assert var_s_minus_k(4, (1.0, 0.5)) == pytest.approx(1.25, rel=1e-14)


def test_var_s_minus_k_three_leaves_exact():
    # j = 1, 2 with t1 = 2 in rational arithmetic
    t = Fraction(2)
    expected = sum(t**2 * (t**2 + 3 * t * j + j**2) / (j**2 * (j + t) ** 2) for j in (1, 2))
    assert var_s_minus_k(9, (2.0, 0.5)) == pytest.approx(float(expected), rel=1e-14)


def test_mean_delta_examples():
    assert mean_delta(1000, (0.0, 1.0)) == 0.0
    assert mean_delta(10**5, (1, 1)) == pytest.approx(0.011679244422188, rel=1e-12)
    assert mean_delta(10**5, (1, 1)) <= mean_delta_bound(10**5, (1, 1))


def test_mean_delta_exceeds_tail_bound():
    # the k >= 2 tail bound theta^2 (pi^2/6 - 1) omits the j = 1 strip and is not a bound
    theta = 1 / math.log(10**5)
    tail = theta**2 * (math.pi**2 / 6 - 1)
    assert tail == pytest.approx(0.0048656843523538, rel=1e-12)
    assert mean_delta(10**5, (1, 1)) > tail


def test_mean_delta_decreasing_in_n():
    vals = [mean_delta(n, (1, 1)) for n in DECADES]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_prob_delta_positive_small_case():
    # m = 2: one strip, P(>= 2 points) = (theta / (1 + theta))^2
    theta = rescale(4, 1.0)
    assert prob_delta_positive(4, (1.0, 0.5)) == pytest.approx((theta / (1 + theta)) ** 2, rel=1e-14)
    assert prob_delta_positive(4, (0.0, 0.5)) == 0.0


@settings(max_examples=1000)
@given(st.integers(2, 10**5), st.floats(0, 10), st.floats(0, 1))
def test_delta_identity(n, t1, t2):
    theta = rescale(n, t1)
    lhs = mean_s(n, (theta, t2)) - (mean_k(n, (theta, t2)) - 1)
    rhs = mean_delta(n, (t1, t2))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


@settings(max_examples=300)
@given(st.integers(2, 10**5), st.floats(0, 10), st.floats(0, 1))
def test_nonnegativity(n, t1, t2):
    t = (t1, t2)
    r = moment_report(n, t1, t2)
    assert all(math.isfinite(v) and v >= 0 for v in r.to_dict().values())
    assert var_s(n, t) >= mean_s(n, t)
    assert var_s_minus_k(n, t) >= 0
    assert mean_delta(n, t) <= mean_delta_bound(n, t) * (1 + 1e-12) + 1e-300


def test_rescaled_mean_approaches_area():
    ratios = [mean_s(n, (rescale(n, 1.0), 1.0)) for n in DECADES]
    assert all(a > b > 1 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=0.05)
    r = moment_report(10**6, 2.0, 0.5, rescaled=True)
    assert r.mean_s == pytest.approx(1.0, abs=0.1)
    assert r.limit_mean == 1.0


def test_limit_quantities():
    empty = validate_union([])
    assert limit_void_probability(empty) == 1.0
    assert limit_void_probability(corner(1, 1)) == pytest.approx(0.36787944117144233)
    two = validate_union([Rect(0, 1, 0, 1), Rect(2, 3, 0, 1)])
    assert limit_void_probability(two) == pytest.approx(0.1353352832366127)
    assert limit_mean(empty) == 0
    assert limit_mean(corner(1, 1)) == 1
    assert limit_mean(Rect(0, 2, 0, 0.5)) == 1


def test_conditional_void():
    n = 1000
    assert conditional_void_probability(Rect(0.3, 0.3, 0, 1), (1.0, 5.0), n) == 1.0
    assert conditional_void_probability(corner(1, 1), (2.0, 2.0), n) == 1.0
    assert conditional_void_probability(corner(1, 1), (0.0, 2 * math.log(n)), n) == pytest.approx(math.exp(-1))
    with pytest.raises(InvalidParameter):
        conditional_void_probability(corner(1, 1), (2.0, 1.0), n)


def test_void_probability_tends_to_limit():
    u = corner(1, 1)
    gaps = [abs(void_probability_exact(n, u) - limit_void_probability(u)) for n in DECADES]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_finite_n_oracles_against_simulation():
    n, reps = 100, 20_000
    rng = np.random.default_rng(9)
    u = validate_union([Rect(0, 1, 0, 0.5), Rect(1, 3, 0.5, 1)])
    s, k = np.empty(reps), np.empty(reps)
    for i in range(reps):
        ctx = build_context(n, 3, 1, rng)
        s[i], k[i] = pi_union(ctx, "S", u), pi_union(ctx, "K", u)
    for x, which in ((s, "S"), (k, "K")):
        assert abs(x.mean() - exact_mean_union(n, u, which)) <= 3 * x.std(ddof=1) / math.sqrt(reps)
    p = void_probability_exact(n, u)
    for x in (s, k):
        assert abs(np.mean(x == 0) - p) <= 3 * math.sqrt(p * (1 - p) / reps)


def test_exact_union_mean_on_corner_matches_closed_forms():
    n = 1000
    theta = rescale(n, 1.5)
    assert exact_mean_union(n, corner(1.5, 0.8), "S") == pytest.approx(mean_s(n, (theta, 0.8)))
    assert exact_mean_union(n, corner(1.5, 0.8), "K") == pytest.approx(mean_k(n, (theta, 0.8)) - 1)
    with pytest.raises(InvalidParameter):
        exact_mean_union(n, corner(1, 1), "X")
