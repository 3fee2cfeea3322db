"""Exception types raised across the toolkit."""


class PVError(Exception):
    """Base class for toolkit errors."""


class ParameterError(PVError, ValueError):
    pass


class ValidationError(PVError, ValueError):
    pass


class DomainError(PVError, ValueError):
    pass


class DegenerateInputError(PVError, ValueError):
    pass


class InsufficientDataError(PVError, ValueError):
    pass


class UnsupportedDimensionError(PVError, ValueError):
    pass


class CertificationError(PVError, RuntimeError):
    """A cell needed for a statistic is unbounded or not provably exact."""


class EmptyClassError(PVError, RuntimeError):
    """No cell qualifies for the requested class."""


class RunAbortedError(PVError, RuntimeError):
    """Too many replications of an experiment were aborted."""
