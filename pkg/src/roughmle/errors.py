"""Exception hierarchy shared across the package."""


class RoughMleError(Exception):
    """Base class for all package-specific failures."""


class FactorizationFailure(RoughMleError):
    """Cholesky factorization hit a non-positive pivot.

    The fGN covariance matrix is positive definite in exact arithmetic, so
    this signals a genuine floating-point precision limit (extreme H, very
    large N).  No jitter is applied; the caller must reduce the problem size.
    """


class ConvergenceFailure(RoughMleError):
    """An iterative solver stalled before reaching its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConfigError(RoughMleError):
    """Invalid or inconsistent configuration values."""


class StabilityError(RoughMleError):
    """Explicit-Euler step too large relative to the fast time scale."""


class AlignmentError(RoughMleError):
    """Requested sampling rate does not align with the available grid."""


class DomainError(RoughMleError):
    """Operation called outside its valid parameter regime."""


class QuadratureError(RoughMleError):
    """Quadrature could not certify the requested accuracy."""
