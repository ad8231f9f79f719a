"""Ewens permutations, cycle counts and the Feller representation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coalescent import sample_increments, sample_total_lengths
from .errors import InvalidParameter, OracleRange
from .harmonic import floor_power

__all__ = [
    "Permutation",
    "CyclePmf",
    "rising_factorial",
    "ewens_pmf",
    "cycle_count",
    "sample_crp",
    "sample_crp_batch",
    "cycle_counts",
    "feller_cycle_count",
    "feller_cycle_counts",
    "stirling_first_unsigned",
    "exact_cycle_pmf",
    "enumerate_cycle_pmf",
    "expected_cycles",
    "sample_segregating_sites",
    "sample_segregating_sites_batch",
]

ORACLE_MAX_N = 20


@dataclass(frozen=True)
class Permutation:
    """One-line form: ``mapping[i]`` is the image of ``i + 1``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.mapping)
        if sorted(mapping) != list(range(1, len(mapping) + 1)):
            raise InvalidParameter(f"not a permutation of [{len(mapping)}]: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def n(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))


@dataclass(frozen=True)
class CyclePmf:
    """``probs[k - 1] = P(#cycles = k)`` for ``k = 1..n``."""

    n: int
    t1: float
    probs: np.ndarray

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k - 1])

    def mean(self) -> float:
        return float(np.dot(np.arange(1, self.n + 1), self.probs))


def rising_factorial(x: float, n: int) -> float:
    """``x (x + 1) ... (x + n - 1)``; 1 for ``n = 0``."""
    if n < 0:
        raise InvalidParameter(f"n must be >= 0, got {n}")
    out = 1.0
    for i in range(n):
        out *= x + i
    return out


def ewens_pmf(n: int, t1: float, cycles: int) -> float:
    """Probability of one particular permutation of ``[n]`` with ``cycles`` cycles."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not 1 <= cycles <= n:
        raise InvalidParameter(f"cycles must lie in 1..{n}, got {cycles}")
    if t1 <= 0:
        raise InvalidParameter(f"t1 must be positive, got {t1}")
    return t1**cycles / rising_factorial(t1, n)


def cycle_count(p: Permutation | Sequence[int]) -> int:
    mapping = p.mapping if isinstance(p, Permutation) else tuple(p)
    n = len(mapping)
    seen = [False] * n
    cycles = 0
    for start in range(n):
        if seen[start]:
            continue
        cycles += 1
        i = start
        while not seen[i]:
            seen[i] = True
            i = mapping[i] - 1
    return cycles


def sample_crp(n: int, t1: float, rng: np.random.Generator) -> Permutation:
    """Sequential (Chinese restaurant) sampler for Ewens(n, t1).

    Element ``i + 1`` opens a new cycle with probability ``t1 / (t1 + i)``,
    otherwise it is spliced in after a uniformly chosen earlier element.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if t1 <= 0:
        raise InvalidParameter(f"t1 must be positive, got {t1}")
    sigma = [0] * n  # 0-based images
    u = rng.random(n)
    for i in range(n):
        if u[i] * (t1 + i) < t1:
            sigma[i] = i
        else:
            j = int(rng.integers(i))
            sigma[i] = sigma[j]
            sigma[j] = i
    return Permutation(tuple(v + 1 for v in sigma))


def sample_crp_batch(n: int, t1: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` CRP permutations at once, as 0-based one-line rows of shape ``(size, n)``."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if t1 <= 0:
        raise InvalidParameter(f"t1 must be positive, got {t1}")
    sigma = np.zeros((size, n), dtype=np.int64)
    rows = np.arange(size)
    for i in range(n):
        u = rng.random(size)
        j = np.minimum((rng.random(size) * i).astype(np.int64), max(i - 1, 0))
        opens = u * (t1 + i) < t1
        sigma[:, i] = i
        join = rows[~opens]
        if join.size:
            jj = j[~opens]
            sigma[join, i] = sigma[join, jj]
            sigma[join, jj] = i
    return sigma


def cycle_counts(perms: np.ndarray) -> np.ndarray:
    """Cycle counts of each 0-based one-line row in ``perms``."""
    perms = np.asarray(perms)
    size, n = perms.shape
    seen = np.zeros((size, n), dtype=bool)
    counts = np.zeros(size, dtype=np.int64)
    rows = np.arange(size)
    for start in range(n):
        fresh = ~seen[:, start]
        counts += fresh
        cur = np.full(size, start)
        active = fresh.copy()
        while active.any():
            r = rows[active]
            seen[r, cur[active]] = True
            cur[active] = perms[r, cur[active]]
            active[active] = ~seen[r, cur[active]]
    return counts


def _feller_probs(m: int, theta: float) -> np.ndarray:
    k = np.arange(2, m + 1, dtype=np.float64)
    return theta / (theta + k - 1.0)


def feller_cycle_count(m: int, theta: float, rng: np.random.Generator) -> int:
    """``1 + sum_{k=2}^m Bernoulli(theta / (theta + k - 1))``."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    if theta <= 0:
        raise InvalidParameter(f"theta must be positive, got {theta}")
    if m == 1:
        return 1
    return 1 + int(np.count_nonzero(rng.random(m - 1) < _feller_probs(m, theta)))


def feller_cycle_counts(m: int, theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`feller_cycle_count` over ``size`` independent draws."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    if m == 1:
        return np.ones(size, dtype=np.int64)
    p = _feller_probs(m, theta)
    return 1 + (rng.random((size, m - 1)) < p).sum(axis=1)


def stirling_first_unsigned(n: int) -> np.ndarray:
    """Row ``|s(n, k)|`` for ``k = 0..n`` via ``|s(n,k)| = |s(n-1,k-1)| + (n-1)|s(n-1,k)|``."""
    row = np.zeros(n + 1, dtype=np.float64)
    row[0] = 1.0
    for i in range(1, n + 1):
        new = np.zeros(n + 1, dtype=np.float64)
        new[1:i + 1] = row[0:i] + (i - 1) * row[1:i + 1]
        row = new
    return row


def exact_cycle_pmf(n: int, t1: float) -> CyclePmf:
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if n > ORACLE_MAX_N:
        raise OracleRange(f"exact pmf limited to n <= {ORACLE_MAX_N}, got {n}")
    if t1 <= 0:
        raise InvalidParameter(f"t1 must be positive, got {t1}")
    stirling = stirling_first_unsigned(n)[1:]
    k = np.arange(1, n + 1)
    probs = stirling * np.power(float(t1), k) / rising_factorial(t1, n)
    return CyclePmf(n, float(t1), probs)


def enumerate_cycle_pmf(n: int, t1: float) -> CyclePmf:
    """Brute force over all ``n!`` permutations; for cross-checking small ``n``."""
    if n > 8:
        raise OracleRange(f"enumeration limited to n <= 8, got {n}")
    weights = np.zeros(n, dtype=np.float64)
    for perm in itertools.permutations(range(1, n + 1)):
        c = cycle_count(perm)
        weights[c - 1] += ewens_pmf(n, t1, c)
    return CyclePmf(n, float(t1), weights)


def expected_cycles(n: int, t: tuple[float, float]) -> float:
    """``E K(n, t) = 1 + sum_{k=2}^{floor(n**t2)} t1 / (t1 + k - 1)``."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    t1, t2 = t
    m = floor_power(n, t2)
    if m == 1 or t1 == 0:
        return 1.0
    if math.isinf(t1):
        return float(m)
    return 1.0 + float(_feller_probs(m, t1).sum())


def sample_segregating_sites(m: int, theta: float, rng: np.random.Generator) -> int:
    """Direct draw of S: tree length ``L_m`` then ``Poisson(theta * L_m / 2)``."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    if m == 1:
        return 0
    total = sample_increments(m, rng).total
    return int(rng.poisson(0.5 * theta * total))


def sample_segregating_sites_batch(m: int, theta: float, size: int,
                                   rng: np.random.Generator) -> np.ndarray:
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    totals = sample_total_lengths(m, size, rng)
    return rng.poisson(0.5 * theta * totals)
