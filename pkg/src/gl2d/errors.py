"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Field array shape does not match the grid layout."""


class DomainError(ValueError):
    """Requested point lies outside the closed domain."""


class SolverError(RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CompatibilityError(ValueError):
    """Neumann data incompatible with the source term."""


class NormSpecError(ValueError):
    """Invalid norm specification."""


class DegenerateFieldError(ValueError):
    """Operation undefined on an identically vanishing field."""


class ChartError(ValueError):
    """Boundary chart is degenerate for the requested extents."""


class ConfigError(ValueError):
    """Invalid run configuration."""
