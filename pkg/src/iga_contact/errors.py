"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain of a spline or map."""


class ConfigurationError(ValueError):
    """Inconsistent model, boundary condition or benchmark configuration."""


class InadmissibleStateError(ArithmeticError):
    """Deformation with ``det F <= 0`` was encountered."""


class ProjectionError(RuntimeError):
    """Closest-point projection did not converge."""


class SolverError(RuntimeError):
    """Load stepping failed after exhausting the bisection budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
