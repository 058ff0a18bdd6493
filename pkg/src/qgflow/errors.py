"""Exception hierarchy for qgflow."""


class QGError(Exception):
    """Base class for all package errors."""


class StructuralError(QGError, ValueError):
    """Operands live on incompatible grids or have the wrong shape."""


class DomainError(QGError, ValueError):
    """An argument lies outside the domain of the operation."""


class GevreyOverflowError(QGError, ArithmeticError):
    """A Gevrey weight exponent exceeds the configured cap."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class ConfigError(QGError, ValueError):
    """Invalid configuration; ``violations`` lists every failed rule."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CFLError(QGError, RuntimeError):
    """Time step rejected by the advective CFL guard."""


class BlowUpError(QGError, RuntimeError):
    """Sup norm exceeded the blow-up guard; ``trajectory`` holds the partial run."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class PicardDivergenceError(QGError, RuntimeError):
    """Picard residual grew on consecutive iterates."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class InsufficientDataError(QGError, ValueError):
    """Not enough samples (snapshots, shells, decades) for a fit."""
