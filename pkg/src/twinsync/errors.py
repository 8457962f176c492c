"""Exception types shared across the engine."""


class TwinsyncError(Exception):
    """Base class for all engine errors."""


class DomainError(TwinsyncError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DimensionError(TwinsyncError, ValueError):
    """Vector/chain size mismatch."""


class UnreachableTargetError(TwinsyncError):
    """IK failed to converge; carries the best residual seen."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


class ReplanInfeasibleError(TwinsyncError):
    """No avoidance plan exists without moving a fixed endpoint."""


class RejectedCommandError(TwinsyncError):
    """Command target outside joint limits; the plant holds."""


class LinkTimeoutError(TwinsyncError):
    """Synchronous round trip got no acknowledgment within the deadline."""


class UndefinedMetricError(TwinsyncError):
    """Metric requested on a log that cannot support it."""


class UndefinedRehearsalError(TwinsyncError):
    """Rehearsal requested for a pending plan without a candidate."""


class StateTransitionError(TwinsyncError):
    """Illegal pending-plan status transition."""


class DecisionConflictError(TwinsyncError):
    """A second decision was submitted for an already-decided plan."""


class PlanNotFoundError(TwinsyncError, KeyError):
    """Unknown pending-plan id."""


class ConfigError(TwinsyncError, ValueError):
    """Scenario config failed validation; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
