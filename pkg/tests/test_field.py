import math

import numpy as np
import pytest

from coalpp.errors import InvalidParameter, OutOfWindow
from coalpp.field import PoissonField, count_in, sample_field
from coalpp.geometry import Rect, validate_union


def _counts(wx, wy, draws, seed):
    rng = np.random.default_rng(seed)
    return np.array([len(sample_field(wx, wy, rng)) for _ in range(draws)])


def test_mean_count():
    c = _counts(2, 1, 100_000, 1)
    assert abs(c.mean() - 1) <= 3 * c.std(ddof=1) / math.sqrt(c.size)


def test_count_variance():
    c = _counts(4, 2, 100_000, 2)
    # SE of the sample variance for Poisson(mu): sqrt((mu + 2 mu^2) / N)
    se = math.sqrt((4 + 2 * 16) / c.size)
    assert abs(c.var(ddof=1) - 4) <= 3 * se


def test_tiny_window_is_empty():
    c = _counts(2e-12, 1, 10_000, 3)
    assert c.sum() == 0


@pytest.mark.parametrize("wx,wy", [(0, 1), (1, -1), (math.inf, 1), (1, math.nan)])
def test_bad_window(wx, wy, rng):
    with pytest.raises(InvalidParameter):
        sample_field(wx, wy, rng)


def test_count_in_examples():
    assert count_in(PoissonField.empty(3, 3), Rect(0, 1, 0, 1)) == 0
    f = PoissonField(2, 1, np.array([0.5, 1.5]), np.array([0.5, 0.2]))
    assert count_in(f, Rect(0, 1, 0, 1)) == 1
    assert count_in(f, Rect(0, 2, 0, 1)) == 2
    # half-open edges
    assert count_in(f, Rect(0, 0.5, 0, 1)) == 0
    assert count_in(f, Rect(0.5, 1, 0.5, 1)) == 1


def test_count_in_rejects_outside_window():
    f = PoissonField(2, 1, np.array([0.5]), np.array([0.5]))
    with pytest.raises(OutOfWindow):
        count_in(f, Rect(0, 2.5, 0, 1))
    with pytest.raises(OutOfWindow):
        count_in(f, Rect(0, 1, 0, 1.01))


def test_points_lie_in_half_open_window(rng):
    f = sample_field(10, 3, rng)
    assert np.all((f.xs >= 0) & (f.xs < 10) & (f.ys >= 0) & (f.ys < 3))
    assert np.all(np.diff(f.xs) >= 0)


def test_scan_and_index_paths_agree():
    # large window takes the binary-search path
    rng = np.random.default_rng(4)
    f = sample_field(400, 200, rng)
    assert len(f) > 10_000
    for _ in range(200):
        s1, u1 = np.sort(rng.uniform(0, 400, 2))
        s2, u2 = np.sort(rng.uniform(0, 200, 2))
        brute = np.count_nonzero((f.xs >= s1) & (f.xs < u1) & (f.ys >= s2) & (f.ys < u2))
        assert count_in(f, Rect(s1, u1, s2, u2)) == brute


def test_additivity():
    rng = np.random.default_rng(5)
    u = validate_union([Rect(0, 1, 0, 1), Rect(1, 3, 0, 0.5), Rect(1, 3, 0.5, 2)])
    for _ in range(500):
        f = sample_field(3, 2, rng)
        parts = sum(count_in(f, r) for r in u)
        assert parts == count_in(f, Rect(0, 3, 0, 2)) - count_in(f, Rect(0, 1, 1, 2))


def test_disjoint_counts_uncorrelated():
    rng = np.random.default_rng(6)
    a, b = Rect(0, 1, 0, 1), Rect(1, 2, 0, 1)
    pairs = np.empty((100_000, 2))
    for i in range(pairs.shape[0]):
        f = sample_field(2, 1, rng)
        pairs[i] = count_in(f, a), count_in(f, b)
    assert abs(np.corrcoef(pairs.T)[0, 1]) < 0.02


def test_no_duplicate_points():
    rng = np.random.default_rng(7)
    for _ in range(200):
        f = sample_field(50, 2, rng)
        assert len(set(f.points)) == len(f)


def test_duplicate_points_rejected():
    with pytest.raises(InvalidParameter):
        PoissonField(2, 1, np.array([0.5, 0.5]), np.array([0.2, 0.2]))
