"""Complex Farey fractions in imaginary quadratic fields and their gap statistics."""

from __future__ import annotations

__version__ = "0.1.0"

from .farey import FareySet, enumerate_farey
from .gapstats import GapSample, Region, nearest_gaps
from .limitdist import f_s, limit_cdf, limit_tail
from .ring import RingSpec, make_ring
from .torus import QuadratureConfig

__all__ = [
    "FareySet",
    "GapSample",
    "QuadratureConfig",
    "Region",
    "RingSpec",
    "enumerate_farey",
    "f_s",
    "limit_cdf",
    "limit_tail",
    "make_ring",
    "nearest_gaps",
    "__version__",
]
