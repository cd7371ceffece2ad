"""Reconstruction of entire functions on C^2 from their restrictions to complex lines."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DensityError,
    DuplicateNode,
    GapError,
    HoloreconError,
    IdentityViolation,
    IndexOverflow,
    OverlapError,
    PoleTooClose,
    PrecisionFailure,
    PrecisionWarning,
    TruncationUnavailable,
    WitnessOrderError,
)
from .numerics import PrecisionComplex, default_precision  # noqa: E402
