"""Exception types shared across the package."""


class MacboxError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MacboxError):
    """A constructor or operation received out-of-range arguments."""


class MeshError(MacboxError):
    """A mesh violates a structural requirement (degenerate element, ...)."""


class GeometryError(MacboxError):
    """Geometric preconditions fail (non-collinear interface, ...)."""


class ConfigError(MacboxError):
    """A study or boundary configuration is inconsistent or incomplete."""


class SolverError(MacboxError):
    """The linear solver failed (singular matrix, bad residual)."""


class NonConvergenceError(MacboxError):
    """Newton ran out of iterations.  Carries the iteration report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
