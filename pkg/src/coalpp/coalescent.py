"""Kingman coalescent tree lengths.

While ``k`` lineages remain the tree grows by ``k`` branches for an
exponential time with rate ``k(k-1)/2``, so the total length grows by an
exponential increment with rate ``(k-1)/2``. This is the rate that gives
``E L_m = 2 H_{m-1}``; the per-epoch waiting time ``binom(k, 2)`` is not the
length increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameter
from .harmonic import floor_power, harmonic

__all__ = [
    "TreeLengths",
    "sample_increments",
    "sample_total_lengths",
    "expected_tree_length",
    "expected_normalized_length",
    "gumbel_residual",
]


@dataclass(frozen=True)
class TreeLengths:
    """Cumulative tree lengths ``L_1 = 0, L_2, ..., L_m``.

    ``lengths[k - 1]`` holds ``L_k``.
    """

    m: int
    lengths: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.float64)
        if self.m < 1:
            raise InvalidParameter(f"m must be >= 1, got {self.m}")
        if lengths.shape != (self.m,):
            raise InvalidParameter(
                f"expected {self.m} cumulative lengths, got shape {lengths.shape}")
        if lengths[0] != 0.0:
            raise InvalidParameter("L_1 must be 0")
        if self.m > 1 and not np.all(np.diff(lengths) > 0):
            raise InvalidParameter("cumulative lengths must be strictly increasing")
        if lengths.flags.writeable:
            lengths = lengths.copy()
            lengths.flags.writeable = False
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def _trusted(cls, lengths: np.ndarray) -> "TreeLengths":
        # sampled prefix sums are valid by construction; skip the O(m) checks
        obj = object.__new__(cls)
        lengths.flags.writeable = False
        object.__setattr__(obj, "m", int(lengths.size))
        object.__setattr__(obj, "lengths", lengths)
        return obj

    def __getitem__(self, k: int) -> float:
        """``L_k`` for ``1 <= k <= m``."""
        if not 1 <= k <= self.m:
            raise IndexError(f"L_k defined for 1 <= k <= {self.m}, got k={k}")
        return float(self.lengths[k - 1])

    @property
    def total(self) -> float:
        return float(self.lengths[-1])

    def increments(self) -> np.ndarray:
        """Increments ``L_k - L_{k-1}`` for ``k = 2..m``."""
        return np.diff(self.lengths)


@lru_cache(maxsize=16)
def _mean_increments(m: int) -> np.ndarray:
    # 2 / (k - 1) for k = 2..m
    out = 2.0 / np.arange(1, m, dtype=np.float64)
    out.flags.writeable = False
    return out


def _unit_exponentials(rng: np.random.Generator, size) -> np.ndarray:
    # inverse CDF with U in (0, 1] so that log never sees 0
    u = 1.0 - rng.random(size)
    return -np.log(u)


def sample_increments(m: int, rng: np.random.Generator) -> TreeLengths:
    """Sample ``L_1..L_m`` with independent Exp((k-1)/2) increments."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    lengths = np.empty(m, dtype=np.float64)
    lengths[0] = 0.0
    if m > 1:
        np.cumsum(_unit_exponentials(rng, m - 1) * _mean_increments(m), out=lengths[1:])
    return TreeLengths._trusted(lengths)


def sample_total_lengths(m: int, size: int, rng: np.random.Generator,
                         chunk: int = 1 << 22) -> np.ndarray:
    """Draw ``size`` independent copies of ``L_m`` without keeping prefix sums."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    out = np.zeros(size, dtype=np.float64)
    if m == 1 or size == 0:
        return out
    scale = _mean_increments(m)
    rows = max(1, chunk // (m - 1))
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        out[start:stop] = (_unit_exponentials(rng, (stop - start, m - 1)) * scale).sum(axis=1)
    return out


def expected_tree_length(m: int) -> float:
    """``E L_m = 2 H_{m-1}``."""
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    return 2.0 * harmonic(m - 1, 1)


def expected_normalized_length(n: int, t2: float) -> float:
    """``E L_{floor(n**t2)} / (2 log n)``, which tends to ``t2``."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    return expected_tree_length(floor_power(n, t2)) / (2.0 * math.log(n))


def gumbel_residual(tl: TreeLengths) -> float:
    """``L_m / 2 - log m``; approximately standard Gumbel for large ``m``."""
    if tl.m < 2:
        raise InvalidParameter(f"need m >= 2, got {tl.m}")
    return tl.total / 2.0 - math.log(tl.m)
