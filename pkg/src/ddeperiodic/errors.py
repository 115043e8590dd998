"""Exception types shared across the package."""


class DDEPeriodicError(Exception):
    """Base class for all package-specific errors."""


class GridTooCoarseError(DDEPeriodicError, ValueError):
    """Collocation grid has fewer samples than the projection needs."""


class DomainEscapeError(DDEPeriodicError):
    """An evaluation point left the set on which the field is defined."""

    def __init__(self, message, t=None, point=None):
        super().__init__(message)
        self.t = t
        self.point = point


class NoConvergenceError(DDEPeriodicError):
    """Newton iteration exhausted its budget without converging."""


class SingularJacobianError(DDEPeriodicError):
    """Linear solve inside Newton failed (Jacobian numerically singular)."""


class SingularMatrixError(DDEPeriodicError, ValueError):
    """A sign-of-determinant quantity was requested for a singular matrix."""


class ResonantLinearisationError(DDEPeriodicError):
    """The linearised system has a multiplier too close to 1."""


class StepMisfitError(DDEPeriodicError, ValueError):
    """Integration step does not divide the delay."""


class BlowUpError(DDEPeriodicError):
    """Trajectory exceeded the configured magnitude bound."""


class NotOnBoundaryError(DDEPeriodicError, ValueError):
    """Outward normal requested at a point that is not on the boundary."""


class WeakConditionError(DDEPeriodicError):
    """The inward-pointing boundary condition fails, so no delay budget exists."""


class ConfigError(DDEPeriodicError, ValueError):
    """Run configuration is invalid; message carries the offending field."""
