"""Exception types raised across the package."""


class RandmaxError(Exception):
    """Base class for all package errors."""


class SizeCapExceeded(RandmaxError):
    pass


class InvalidOutput(RandmaxError, ValueError):
    pass


class InvalidSpace(RandmaxError, ValueError):
    pass


class DimensionMismatch(RandmaxError, ValueError):
    pass


class IncompatibleKind(RandmaxError, ValueError):
    pass


class EmptyCandidates(RandmaxError, ValueError):
    pass


class DomainError(RandmaxError, ValueError):
    pass


class DegenerateScale(DomainError):
    """The Gaussian centering scale would be imaginary."""


class SparsityOutOfRange(DomainError):
    pass


class IterationCap(RandmaxError, RuntimeError):
    pass
