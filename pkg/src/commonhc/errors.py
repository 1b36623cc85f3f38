"""Exception hierarchy shared by every module."""


class HCError(Exception):
    """Base class for all package errors."""


class DomainError(HCError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ScheduleError(HCError):
    """A schedule could not be generated or failed validation."""


class GeometryError(HCError):
    """A region schedule violates one of its invariants at some stage."""

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.stage = stage


class FitError(HCError):
    """Polynomial fitting hit the degree cap without meeting the tolerance."""

    def __init__(self, message, best_error=float("inf"), degree=None, stage=None):
        if stage is not None:
            message = f"stage {stage}: {message}"
        super().__init__(message)
        self.best_error = best_error
        self.degree = degree
        self.stage = stage


class QuadratureError(HCError):
    """Adaptive quadrature did not converge within its budget."""

    def __init__(self, message, partial=float("nan"), error=float("inf")):
        super().__init__(message)
        self.partial = partial
        self.error = error


class ConstructionError(HCError):
    """A construction could not be built or its certificate failed."""


class ConfigError(HCError):
    """An experiment configuration is malformed or inconsistent."""
