"""Stick arrangements on dyadic grids, their ball-count and projection certificates,
and nested Cantor measures built from them."""

from .errors import (
    CertificationFailure,
    DegenerateSeries,
    FrostprojError,
    MixedScales,
    ParameterOrder,
    RegimeMismatch,
    ScaleTooCoarse,
    TooLarge,
    UnalignedScale,
)
from .geometry import DyadicSquare, Segment, supercover
from .sticks import Arrangement, build_arrangement, dump_arrangement, load_arrangement
from .verify import BucketIndex, KTReport, build_index, count_ball, verify_kt
from .projection import concentration, direction_sweep, holder_lower_bound, pushforward, scaling_exponent

__all__ = [
    "Arrangement", "BucketIndex", "CertificationFailure", "DegenerateSeries", "DyadicSquare",
    "FrostprojError", "KTReport", "MixedScales", "ParameterOrder", "RegimeMismatch",
    "ScaleTooCoarse", "Segment", "TooLarge", "UnalignedScale", "build_arrangement", "build_index",
    "concentration", "count_ball", "direction_sweep", "dump_arrangement", "holder_lower_bound",
    "load_arrangement", "pushforward", "scaling_exponent", "supercover", "verify_kt",
]
