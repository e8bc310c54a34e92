"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class TruncationError(ValueError):
    """A truncated probability mass function left too much mass in its tail."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ManifestError(ValueError):
    """An experiment manifest failed validation."""
