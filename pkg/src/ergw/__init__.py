"""Divisor-weighted ergodic averages: numerical experiments and checks."""

from .errors import (
    ArcConstraintError,
    DegenerateInputError,
    ErgwError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    ResourceError,
)

__version__ = "0.1.0"

__all__ = [
    "ArcConstraintError",
    "DegenerateInputError",
    "ErgwError",
    "ParameterError",
    "PreconditionError",
    "ResolutionError",
    "ResourceError",
    "__version__",
]
