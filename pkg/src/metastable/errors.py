"""Exception types raised across the toolkit."""


class MetastableError(Exception):
    """Base class for all toolkit errors."""


class QuadratureError(MetastableError):
    """Adaptive quadrature ran out of its subdivision budget."""

    def __init__(self, message, value, error):
        super().__init__(f"{message} (best estimate {value!r}, error estimate {error!r})")
        self.value = value
        self.error = error


class CapabilityError(MetastableError):
    """The object does not support the requested operation."""


class DomainError(MetastableError, ValueError):
    """An argument lies outside the domain of the operation."""


class GridLeakageError(MetastableError):
    """Too much probability flow leaves the discretization grid."""


class ConvergenceError(MetastableError):
    """An iterative eigen-solver exhausted its budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class DegenerateError(MetastableError):
    """The input has no non-trivial structure to analyze."""


class CertificateError(MetastableError):
    """No certificate could be produced; carries the best attempt."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(MetastableError, ValueError):
    """Invalid experiment configuration."""
