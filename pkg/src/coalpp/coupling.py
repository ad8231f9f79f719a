"""One coupled realization of the segregating-sites and cycle-count measures.

A single Poisson field with intensity 1/2 sits on ``[0, L_m) x [0, t1_max / log n)``.
Strip ``k`` is ``[L_{k-1}, L_k)``. For a corner ``[0, t1) x [0, t2)``:

* the S-measure counts points left of ``L_{floor(n**t2)}`` and below ``t1 / log n``;
* the K-measure counts strips ``k = 2..floor(n**t2)`` holding at least one such point.

Both extend to rectangles by inclusion-exclusion over four corners and to
disjoint unions by summation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Literal

import numpy as np

from .coalescent import TreeLengths, sample_increments
from .errors import InvalidParameter, OutOfWindow, ScaleLimit
from .field import PoissonField, count_in, sample_field
from .geometry import Rect, RectUnion, corner_decompose, validate_union
from .harmonic import floor_power

__all__ = [
    "MAX_LEAVES",
    "CouplingContext",
    "build_context",
    "pi_s_corner",
    "pi_k_corner",
    "pi_corner",
    "pi_rect",
    "pi_rect_direct",
    "pi_union",
    "delta_corner",
    "sample_coupled_sk",
]

Which = Literal["S", "K"]

MAX_LEAVES = 10**7
DEBUG = os.environ.get("COALPP_DEBUG", "") not in ("", "0")


@dataclass(frozen=True)
class CouplingContext:
    n: int
    t1_max: float
    t2_max: float
    tree: TreeLengths
    field: PoissonField
    log_n: float = dc_field(init=False)
    # strip index k (2..m) of every field point, aligned with field.xs
    strips: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "log_n", math.log(self.n))
        if len(self.field):
            idx = np.searchsorted(self.tree.lengths, self.field.xs, side="right")
            strips = idx + 1
        else:
            strips = np.empty(0, dtype=np.int64)
        strips.flags.writeable = False
        object.__setattr__(self, "strips", strips)

    @property
    def m(self) -> int:
        return self.tree.m

    def height(self, t1: float) -> float:
        """Field height ``t1 / log n`` matching the rate coordinate ``t1``."""
        return t1 / self.log_n

    def leaves(self, t2: float) -> int:
        return floor_power(self.n, t2)

    def _check(self, t1: float, t2: float) -> None:
        if not (0 <= t1 <= self.t1_max and 0 <= t2 <= self.t2_max):
            raise OutOfWindow(
                f"t = ({t1}, {t2}) outside [0, {self.t1_max}] x [0, {self.t2_max}]")


def build_context(n: int, t1_max: float, t2_max: float,
                  rng: np.random.Generator) -> CouplingContext:
    """Sample tree lengths up to ``m = floor(n**t2_max)`` leaves, then the field."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    for name, v in (("t1_max", t1_max), ("t2_max", t2_max)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidParameter(f"{name} must be positive and finite, got {v}")
    m = floor_power(n, t2_max)
    if m > MAX_LEAVES:
        raise ScaleLimit(f"floor(n**t2_max) = {m} exceeds the cap of {MAX_LEAVES}")
    tree = sample_increments(m, rng)
    height = t1_max / math.log(n)
    if m == 1:
        fld = PoissonField.empty(0.0, height)
    else:
        fld = sample_field(tree.total, height, rng)
    return CouplingContext(n, float(t1_max), float(t2_max), tree, fld)


def pi_s_corner(ctx: CouplingContext, t: tuple[float, float]) -> int:
    t1, t2 = t
    ctx._check(t1, t2)
    width = ctx.tree[ctx.leaves(t2)]
    return count_in(ctx.field, Rect(0.0, width, 0.0, ctx.height(t1)))


def pi_k_corner(ctx: CouplingContext, t: tuple[float, float]) -> int:
    t1, t2 = t
    ctx._check(t1, t2)
    if not len(ctx.field):
        return 0
    mask = (ctx.field.ys < ctx.height(t1)) & (ctx.strips <= ctx.leaves(t2))
    return int(np.unique(ctx.strips[mask]).size)


def pi_corner(ctx: CouplingContext, which: Which, t: tuple[float, float]) -> int:
    if which == "S":
        return pi_s_corner(ctx, t)
    if which == "K":
        return pi_k_corner(ctx, t)
    raise InvalidParameter(f"which must be 'S' or 'K', got {which!r}")


def pi_rect(ctx: CouplingContext, which: Which, r: Rect) -> int:
    """Measure of ``r`` by inclusion-exclusion over its four corners."""
    ctx._check(r.u1, r.u2)
    total = 0
    for point, sign in corner_decompose(r):
        total += sign * pi_corner(ctx, which, point)
    if DEBUG:
        direct = pi_rect_direct(ctx, which, r)
        assert total == direct, f"inclusion-exclusion {total} != direct {direct} on {r}"
    return total


def pi_rect_direct(ctx: CouplingContext, which: Which, r: Rect) -> int:
    """Measure of ``r`` read straight off the points; the oracle for :func:`pi_rect`.

    For S this counts points with ``L_{m(s2)} <= x < L_{m(u2)}`` and
    ``s1 / log n <= y < u1 / log n``. For K it counts strips
    ``m(s2) < k <= m(u2)`` whose lowest point lies in that height band.
    """
    ctx._check(r.u1, r.u2)
    if r.is_empty or not len(ctx.field):
        return 0
    lo_k, hi_k = ctx.leaves(r.s2), ctx.leaves(r.u2)
    x_lo, x_hi = ctx.tree[lo_k], ctx.tree[hi_k]
    y_lo, y_hi = ctx.height(r.s1), ctx.height(r.u1)
    xs, ys = ctx.field.xs, ctx.field.ys
    if which == "S":
        return int(np.count_nonzero((xs >= x_lo) & (xs < x_hi) & (ys >= y_lo) & (ys < y_hi)))
    if which != "K":
        raise InvalidParameter(f"which must be 'S' or 'K', got {which!r}")
    strips = ctx.strips
    in_band = (strips > lo_k) & (strips <= hi_k)
    lowest: dict[int, float] = {}
    for k, y in zip(strips[in_band].tolist(), ys[in_band].tolist()):
        if y < lowest.get(k, math.inf):
            lowest[k] = y
    return sum(1 for y in lowest.values() if y_lo <= y < y_hi)


def pi_union(ctx: CouplingContext, which: Which, u: RectUnion | Rect) -> int:
    if isinstance(u, Rect):
        return pi_rect(ctx, which, u)
    u = validate_union(u)
    return sum(pi_rect(ctx, which, r) for r in u)


def delta_corner(ctx: CouplingContext, t: tuple[float, float]) -> int:
    """``S - K`` on the corner ``[0, t)``; never negative."""
    return pi_s_corner(ctx, t) - pi_k_corner(ctx, t)


def sample_coupled_sk(m: int, theta: float, rng: np.random.Generator) -> tuple[int, int]:
    """One coupled draw of ``(S, K)`` at ``m`` leaves and unscaled rate ``theta``.

    Same construction as the corner measures with the field height set to
    ``theta`` instead of ``t1 / log n``; ``K`` includes the leading 1.
    """
    if m < 1:
        raise InvalidParameter(f"m must be >= 1, got {m}")
    if not theta > 0:
        raise InvalidParameter(f"theta must be positive, got {theta}")
    if m == 1:
        return 0, 1
    tree = sample_increments(m, rng)
    fld = sample_field(tree.total, theta, rng)
    if not len(fld):
        return 0, 1
    strips = np.searchsorted(tree.lengths, fld.xs, side="right")
    return len(fld), 1 + int(np.unique(strips).size)
