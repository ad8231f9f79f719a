"""Homogeneous Poisson point set with intensity 1/2 on a bounded window."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, OutOfWindow
from .geometry import Rect

__all__ = ["PoissonField", "sample_field", "count_in", "INTENSITY"]

INTENSITY = 0.5
# above this many points, counting uses the x-sorted index instead of a scan
_SCAN_LIMIT = 10_000


@dataclass(frozen=True)
class PoissonField:
    """Realized points on ``[0, window_x) x [0, window_y)``, sorted by x."""

    window_x: float
    window_y: float
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise InvalidParameter("xs and ys must be 1-d arrays of equal length")
        if self.window_x < 0 or self.window_y < 0:
            raise InvalidParameter("window dimensions must be nonnegative")
        if xs.size:
            if xs.min() < 0 or xs.max() >= self.window_x or ys.min() < 0 or ys.max() >= self.window_y:
                raise InvalidParameter("points must lie inside the half-open window")
            order = np.lexsort((ys, xs))
            xs, ys = xs[order], ys[order]
            # simplicity: no two points coincide
            if ((np.diff(xs) == 0) & (np.diff(ys) == 0)).any():
                raise InvalidParameter("duplicate point in Poisson field")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def empty(cls, window_x: float = 0.0, window_y: float = 0.0) -> "PoissonField":
        return cls(window_x, window_y, np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return int(self.xs.size)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))


def sample_field(window_x: float, window_y: float, rng: np.random.Generator) -> PoissonField:
    """Draw ``N ~ Poisson(window_x * window_y / 2)`` i.i.d. uniform points."""
    for name, v in (("window_x", window_x), ("window_y", window_y)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidParameter(f"{name} must be positive and finite, got {v}")
    count = int(rng.poisson(INTENSITY * window_x * window_y))
    if count == 0:
        return PoissonField.empty(window_x, window_y)
    xs = rng.random(count) * window_x
    ys = rng.random(count) * window_y
    # products can round up onto the open upper edge
    np.minimum(xs, np.nextafter(window_x, 0.0), out=xs)
    np.minimum(ys, np.nextafter(window_y, 0.0), out=ys)
    return PoissonField(window_x, window_y, xs, ys)


def count_in(field: PoissonField, r: Rect) -> int:
    """Number of points in ``r``, read as ``[s1, u1) x [s2, u2)`` in (x, y)."""
    if r.u1 > field.window_x or r.u2 > field.window_y:
        raise OutOfWindow(
            f"rectangle [{r.s1}, {r.u1}) x [{r.s2}, {r.u2}) exceeds window "
            f"[0, {field.window_x}) x [0, {field.window_y})")
    if r.is_empty or not len(field):
        return 0
    xs, ys = field.xs, field.ys
    if xs.size > _SCAN_LIMIT:
        lo, hi = np.searchsorted(xs, [r.s1, r.u1], side="left")
        xs, ys = xs[lo:hi], ys[lo:hi]
    mask = (xs >= r.s1) & (xs < r.u1) & (ys >= r.s2) & (ys < r.u2)
    return int(np.count_nonzero(mask))
