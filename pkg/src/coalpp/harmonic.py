"""Harmonic numbers H_n^(b), the shifted sum H*_n and the distribution function F_n."""

from __future__ import annotations

import math
import threading

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "HarmonicCache",
    "floor_power",
    "harmonic",
    "harmonic_table",
    "hstar",
    "fn_cdf",
]

# relative guard so that exactly integral powers (100**0.5) do not floor to m - 1
_FLOOR_EPS = 1e-12


def floor_power(n: int, t: float) -> int:
    """Return ``floor(n**t)`` for ``n >= 1`` and ``t >= 0``."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if t < 0 or not math.isfinite(t):
        raise InvalidParameter(f"t must be finite and >= 0, got {t}")
    if t == 0 or n == 1:
        return 1
    value = math.exp(t * math.log(n))
    return int(math.floor(value * (1.0 + _FLOOR_EPS)))


class HarmonicCache:
    """Partial sums ``H_0 = 0, H_1, ..., H_N`` of ``1/k**order``.

    ``values[k]`` holds ``H_k``. Sums are accumulated forward in double
    precision; the array is read-only.
    """

    def __init__(self, size: int, order: int = 1):
        if order < 1:
            raise InvalidParameter(f"order must be a positive integer, got {order}")
        if size < 0:
            raise InvalidParameter(f"size must be >= 0, got {size}")
        self.order = int(order)
        self.size = int(size)
        k = np.arange(1, size + 1, dtype=np.float64)
        values = np.empty(size + 1, dtype=np.float64)
        values[0] = 0.0
        np.cumsum(1.0 / k**order, out=values[1:])
        values.flags.writeable = False
        self.values = values

    def __getitem__(self, n: int) -> float:
        return float(self.values[n])

    def __len__(self) -> int:
        return self.size + 1


_caches: dict[int, HarmonicCache] = {}
_lock = threading.Lock()


def harmonic_table(n: int, order: int = 1) -> np.ndarray:
    """Read-only array ``[H_0, ..., H_N]`` with ``N >= n`` for the given order."""
    cache = _caches.get(order)
    if cache is None or cache.size < n:
        with _lock:
            cache = _caches.get(order)
            if cache is None or cache.size < n:
                size = max(n, 1024, 2 * cache.size if cache is not None else 0)
                cache = HarmonicCache(size, order)
                _caches[order] = cache
    return cache.values


def harmonic(n: int, b: int = 1) -> float:
    """Generalised harmonic number ``sum_{k=1}^n 1/k**b`` (0 for ``n = 0``)."""
    if n < 0:
        raise InvalidParameter(f"n must be >= 0, got {n}")
    return float(harmonic_table(n, b)[n])


def hstar(n: int) -> float:
    """``sum_{k=2}^n 1/k``, with the empty sum for ``n`` in {0, 1}."""
    if n < 0:
        raise InvalidParameter(f"n must be >= 0, got {n}")
    if n <= 1:
        return 0.0
    return harmonic(n, 1) - 1.0


def fn_cdf(n: int, t: float) -> float:
    """``H*_{floor(n**t) - 1} / log n``; bounded above by ``t``."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2 so that log n > 0, got {n}")
    if t < 0:
        raise InvalidParameter(f"t must be >= 0, got {t}")
    return hstar(floor_power(n, t) - 1) / math.log(n)
