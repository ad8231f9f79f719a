"""Closed-form finite-n moments and limit quantities.

``mean_s``, ``var_s``, ``mean_k`` and ``var_s_minus_k`` take the mutation
parameter ``t1`` as given; pass ``t1 / log n`` (or use :func:`rescale`) for
the quantities seen by the corner measures. ``mean_delta`` and
``prob_delta_positive`` already work on the rescaled scale.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParameter
from .geometry import Rect, RectUnion, validate_union
from .harmonic import floor_power, harmonic

__all__ = [
    "MomentReport",
    "rescale",
    "mean_s",
    "var_s",
    "mean_k",
    "var_s_minus_k",
    "mean_delta",
    "mean_delta_bound",
    "prob_delta_positive",
    "void_probability_exact",
    "exact_mean_union",
    "limit_void_probability",
    "conditional_void_probability",
    "limit_mean",
    "moment_report",
]


def _leaves(n: int, t2: float) -> int:
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    return floor_power(n, t2)


def rescale(n: int, t1: float) -> float:
    return t1 / math.log(n)


def mean_s(n: int, t: tuple[float, float]) -> float:
    t1, t2 = t
    return t1 * harmonic(_leaves(n, t2) - 1, 1)


def var_s(n: int, t: tuple[float, float]) -> float:
    t1, t2 = t
    j = _leaves(n, t2) - 1
    return t1 * harmonic(j, 1) + t1 * t1 * harmonic(j, 2)


def mean_k(n: int, t: tuple[float, float]) -> float:
    t1, t2 = t
    m = _leaves(n, t2)
    if m == 1 or t1 == 0:
        return 1.0
    if math.isinf(t1):
        return float(m)
    j = np.arange(1, m, dtype=np.float64)
    return 1.0 + float(np.sum(t1 / (t1 + j)))


def var_s_minus_k(n: int, t: tuple[float, float]) -> float:
    t1, t2 = t
    m = _leaves(n, t2)
    if m == 1 or t1 == 0:
        return 0.0
    j = np.arange(1, m, dtype=np.float64)
    return float(np.sum(t1**2 * (t1**2 + 3 * t1 * j + j**2) / (j**2 * (j + t1) ** 2)))


def mean_delta(n: int, t: tuple[float, float]) -> float:
    """``E[S - K]`` on the corner ``[0, t)`` with ``theta = t1 / log n``.

    Equals ``theta * sum_{j=1}^{m-1} theta / (j**2 + j * theta)``, i.e. the
    rescaled ``mean_s - (mean_k - 1)``.
    """
    t1, t2 = t
    m = _leaves(n, t2)
    theta = rescale(n, t1)
    if m == 1 or theta == 0:
        return 0.0
    j = np.arange(1, m, dtype=np.float64)
    return float(theta * np.sum(theta / (j * j + j * theta)))


def mean_delta_bound(n: int, t: tuple[float, float]) -> float:
    """``theta**2 * H^(2)_{m-1}``, an upper bound for :func:`mean_delta`."""
    t1, t2 = t
    theta = rescale(n, t1)
    return theta * theta * harmonic(_leaves(n, t2) - 1, 2)


def prob_delta_positive(n: int, t: tuple[float, float]) -> float:
    """``P(S != K)`` on the corner ``[0, t)``.

    Strip ``j + 1`` holds a geometric number of points with
    ``P(>= 2) = (theta / (j + theta))**2``, independently across strips.
    """
    t1, t2 = t
    m = _leaves(n, t2)
    theta = rescale(n, t1)
    if m == 1 or theta == 0:
        return 0.0
    j = np.arange(1, m, dtype=np.float64)
    q = theta / (j + theta)
    return float(-np.expm1(np.sum(np.log1p(-q * q))))


def void_probability_exact(n: int, u: RectUnion | Rect) -> float:
    """Finite-n ``P(S-measure of u = 0)``; identical for the K-measure.

    Given the tree, the union is void with probability
    ``exp(-sum_k width_k * (L_{m(u2)} - L_{m(s2)}) / (2 log n))``. Collecting
    the rate seen by every strip and integrating out its exponential length
    gives ``prod_j j / (j + theta_j)``.
    """
    rects = (u,) if isinstance(u, Rect) else validate_union(u).rects
    rates: dict[int, float] = {}
    for r in rects:
        if r.is_empty:
            continue
        lo, hi = _leaves(n, r.s2), _leaves(n, r.u2)
        for k in range(lo + 1, hi + 1):
            rates[k] = rates.get(k, 0.0) + r.width
    if not rates:
        return 1.0
    k = np.fromiter(rates.keys(), dtype=np.float64)
    theta = np.fromiter(rates.values(), dtype=np.float64) / math.log(n)
    j = k - 1.0
    return float(np.exp(np.sum(np.log(j / (j + theta)))))


def exact_mean_union(n: int, u: RectUnion | Rect, which: str = "S") -> float:
    """Finite-n expected S- or K-measure of a rectangle union."""
    rects = (u,) if isinstance(u, Rect) else validate_union(u).rects
    total = 0.0
    for r in rects:
        if r.is_empty:
            continue
        lo, hi = _leaves(n, r.s2), _leaves(n, r.u2)
        if which == "S":
            total += rescale(n, r.width) * (harmonic(hi - 1, 1) - harmonic(lo - 1, 1))
        elif which == "K":
            j = np.arange(lo, hi, dtype=np.float64)
            a, b = rescale(n, r.u1), rescale(n, r.s1)
            total += float(np.sum(a / (a + j) - b / (b + j)))
        else:
            raise InvalidParameter(f"which must be 'S' or 'K', got {which!r}")
    return total


def limit_void_probability(u: RectUnion | Rect) -> float:
    return math.exp(-u.area)


def conditional_void_probability(rect: Rect, lengths: tuple[float, float], n: int) -> float:
    """``exp(-(u1 - s1) (L_high - L_low) / (2 log n))``."""
    low, high = lengths
    if low > high:
        raise InvalidParameter(f"need L_low <= L_high, got {lengths}")
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    return math.exp(-rect.width * (high - low) / (2.0 * math.log(n)))


def limit_mean(u: RectUnion | Rect) -> float:
    return u.area


@dataclass(frozen=True)
class MomentReport:
    n: int
    t1: float
    t2: float
    mean_s: float
    var_s: float
    mean_k: float
    var_s_minus_k: float
    mean_delta: float
    limit_mean: float
    limit_void: float

    def to_dict(self) -> dict:
        return asdict(self)


def moment_report(n: int, t1: float, t2: float, rescaled: bool = False) -> MomentReport:
    """All moments at ``(n, t1, t2)``.

    With ``rescaled`` the S/K moments use ``t1 / log n``; ``mean_delta`` is
    always on the rescaled scale. Limit quantities refer to the corner ``[0, t)``.
    """
    if t1 < 0 or t2 < 0:
        raise InvalidParameter(f"t1 and t2 must be nonnegative, got ({t1}, {t2})")
    rate = rescale(n, t1) if rescaled else t1
    t = (rate, t2)
    return MomentReport(
        n=n, t1=t1, t2=t2,
        mean_s=mean_s(n, t),
        var_s=var_s(n, t),
        mean_k=mean_k(n, t),
        var_s_minus_k=var_s_minus_k(n, t),
        mean_delta=mean_delta(n, (t1, t2)),
        limit_mean=t1 * t2,
        limit_void=math.exp(-t1 * t2),
    )
