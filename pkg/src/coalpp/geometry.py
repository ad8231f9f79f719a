"""Half-open rectangles ``[s1, u1) x [s2, u2)`` and finite disjoint unions of them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidRect, NotDisjoint

__all__ = [
    "Rect",
    "RectUnion",
    "make_rect",
    "corner",
    "corner_decompose",
    "validate_union",
    "area",
    "parse_rect",
    "parse_union",
    "format_rect",
]


@dataclass(frozen=True)
class Rect:
    """``[s1, u1) x [s2, u2)`` in the quadrant; the first axis is ``t1``."""

    s1: float
    u1: float
    s2: float
    u2: float

    def __post_init__(self):
        coords = (self.s1, self.u1, self.s2, self.u2)
        if not all(isinstance(c, (int, float)) and math.isfinite(c) for c in coords):
            raise InvalidRect(f"coordinates must be finite reals, got {coords}")
        if min(coords) < 0:
            raise InvalidRect(f"coordinates must be nonnegative, got {coords}")
        if self.s1 > self.u1 or self.s2 > self.u2:
            raise InvalidRect(f"reversed bounds in {coords}")
        for name, c in zip(("s1", "u1", "s2", "u2"), coords):
            object.__setattr__(self, name, float(c))

    @property
    def width(self) -> float:
        return self.u1 - self.s1

    @property
    def height(self) -> float:
        return self.u2 - self.s2

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def is_empty(self) -> bool:
        return self.s1 == self.u1 or self.s2 == self.u2

    def contains(self, x: float, y: float) -> bool:
        return self.s1 <= x < self.u1 and self.s2 <= y < self.u2

    def overlaps(self, other: "Rect") -> bool:
        if self.is_empty or other.is_empty:
            return False
        return (self.s1 < other.u1 and other.s1 < self.u1
                and self.s2 < other.u2 and other.s2 < self.u2)


def make_rect(s1: float, u1: float, s2: float, u2: float) -> Rect:
    return Rect(s1, u1, s2, u2)


def corner(t1: float, t2: float) -> Rect:
    """The corner rectangle ``[0, t1) x [0, t2)``."""
    return Rect(0.0, t1, 0.0, t2)


def corner_decompose(r: Rect) -> tuple[tuple[tuple[float, float], int], ...]:
    """Signed corner points whose corner measures sum to the measure of ``r``.

    Returns ``((u1, u2), +1), ((s1, s2), +1), ((u1, s2), -1), ((s1, u2), -1)``;
    each pair ``(a, b)`` stands for the corner ``[0, a) x [0, b)``.
    """
    return (
        ((r.u1, r.u2), +1),
        ((r.s1, r.s2), +1),
        ((r.u1, r.s2), -1),
        ((r.s1, r.u2), -1),
    )


@dataclass(frozen=True)
class RectUnion:
    """Pairwise disjoint rectangles; build through :func:`validate_union`."""

    rects: tuple[Rect, ...]

    def __iter__(self):
        return iter(self.rects)

    def __len__(self) -> int:
        return len(self.rects)

    @property
    def area(self) -> float:
        return sum(r.area for r in self.rects)

    def bounds(self) -> tuple[float, float]:
        """Smallest ``(t1, t2)`` whose corner rectangle contains the union."""
        if not self.rects:
            return 0.0, 0.0
        return max(r.u1 for r in self.rects), max(r.u2 for r in self.rects)


def validate_union(rects: Iterable[Rect] | RectUnion) -> RectUnion:
    if isinstance(rects, RectUnion):
        return rects
    rects = tuple(rects)
    for r in rects:
        if not isinstance(r, Rect):
            raise InvalidRect(f"expected Rect, got {type(r).__name__}")
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if rects[i].overlaps(rects[j]):
                raise NotDisjoint(i, j)
    return RectUnion(rects)


def area(u: RectUnion | Rect) -> float:
    return u.area


def parse_rect(text: str) -> Rect:
    """Parse ``"s1,u1,s2,u2"``."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise InvalidRect(f"expected 's1,u1,s2,u2', got {text!r}")
    try:
        coords = [float(p) for p in parts]
    except ValueError:
        raise InvalidRect(f"non-numeric coordinate in {text!r}") from None
    return Rect(*coords)


def parse_union(text: str) -> RectUnion:
    """Parse rectangles joined by ``;``; an empty string is the empty union."""
    chunks = [c for c in (c.strip() for c in text.split(";")) if c]
    return validate_union(parse_rect(c) for c in chunks)


def format_rect(r: Rect) -> str:
    return f"{r.s1:g},{r.u1:g},{r.s2:g},{r.u2:g}"


def _as_union(region: Rect | RectUnion | Sequence[Rect]) -> RectUnion:
    if isinstance(region, Rect):
        return RectUnion((region,))
    return validate_union(region)
