"""Exception hierarchy shared by every module."""


class ErgwError(Exception):
    """Base class for all library errors."""


class ParameterError(ErgwError, ValueError):
    """An argument is outside its documented domain."""


class ArcConstraintError(ParameterError):
    """The major/minor arc parameters violate 16*M*P**2 <= Q <= n."""

    def __init__(self, message, minimal_n=None):
        super().__init__(message)
        self.minimal_n = minimal_n


class DegenerateInputError(ErgwError, ArithmeticError):
    """A normalizing quantity vanishes, so the requested ratio is undefined."""


class ResourceError(ErgwError, MemoryError):
    """The request would exceed a size or memory guard."""


class PreconditionError(ErgwError, ValueError):
    """A documented precondition of the routine is not met by the input."""


class ResolutionError(ErgwError):
    """A sampled transform is under-resolved (aliasing detected)."""
