"""Exception types raised across the package."""


class StableOpError(Exception):
    """Base class for all package errors."""


class InvalidOrder(StableOpError, ValueError):
    """The order s lies outside (0, 1) or is not admissible for the request."""


class DegenerateMeasure(StableOpError, ValueError):
    """The spectral measure is (numerically) supported on a hyperplane."""


class ResolutionError(StableOpError):
    """A grid or quadrature is too coarse for the requested accuracy."""


class QuadratureBudgetExceeded(StableOpError):
    """The certified error bound of a quadrature exceeds its tolerance."""

    def __init__(self, message, bound=None, tol=None):
        super().__init__(message)
        self.bound = bound
        self.tol = tol


class SingularSystem(StableOpError):
    """The assembled collocation matrix could not be factorized."""


class DomainError(StableOpError, ValueError):
    """A measurement region is incompatible with the domain geometry."""


class ConfigError(StableOpError, ValueError):
    """A configuration file or CLI argument is malformed."""
