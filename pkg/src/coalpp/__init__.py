"""Coupled point processes for segregating sites and Ewens cycle counts.

One Poisson field on the quadrant drives both the segregating-sites measure
and the cycle-count measure; :mod:`coalpp.stats` checks their joint Poisson
limit against the closed forms in :mod:`coalpp.moments`.
"""

from .coalescent import TreeLengths, expected_tree_length, sample_increments
from .coupling import (
    CouplingContext,
    build_context,
    delta_corner,
    pi_k_corner,
    pi_rect,
    pi_s_corner,
    pi_union,
)
from .errors import (
    CoalppError,
    InvalidParameter,
    InvalidRect,
    NotDisjoint,
    OracleRange,
    OutOfWindow,
    ScaleLimit,
)
from .field import PoissonField, count_in, sample_field
from .geometry import Rect, RectUnion, corner, make_rect, parse_union, validate_union
from .harmonic import fn_cdf, harmonic, hstar

__version__ = "0.1.0"
