"""Exception hierarchy for the LQ game solvers.

Input problems derive from GameValidationError (CLI exit code 2); failures of a
solver on a valid game derive from SolverError (CLI exit code 1).
"""

from typing import Any, List, Optional, Sequence


class LQGameError(Exception):
    """Base class for every error raised by the package."""


class GameValidationError(LQGameError, ValueError):
    """A game, weight vector or request violates an input invariant."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class NonPositiveWeight(GameValidationError):
    pass


class ZeroGain(GameValidationError):
    pass


class WeightSumMismatch(GameValidationError):
    pass


class ZeroInitialState(GameValidationError):
    pass


class LengthMismatch(GameValidationError):
    pass


class InvalidCooperationMatrix(GameValidationError):
    pass


class ZeroSelfWeight(InvalidCooperationMatrix):
    pass


class DimensionCap(GameValidationError):
    pass


class TargetOutOfRange(GameValidationError):
    pass


class NegativeTime(GameValidationError):
    pass


class InvalidSimulationParameters(GameValidationError):
    pass


class BoundInapplicable(GameValidationError):
    pass


class GameConfigError(GameValidationError):
    """A game config file could not be parsed or validated."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}", field=field)
        self.line = line


class SolverError(LQGameError):
    """A solver could not produce a result for a valid game."""


class NoEquilibrium(SolverError):
    """No stabilizing solution of the coupled Riccati equations was found."""

    def __init__(
        self,
        message: str,
        eigenvalues: Sequence[complex] = (),
        rejections: Sequence[str] = (),
    ):
        super().__init__(message)
        self.eigenvalues: List[complex] = list(eigenvalues)
        self.rejections: List[str] = list(rejections)


class NoBracket(SolverError):
    pass


class ConditionViolated(SolverError):
    pass


class NonConvergence(SolverError):
    def __init__(self, message: str, last_gains: Any = None, gain_change: float = float("nan")):
        super().__init__(message)
        self.last_gains = last_gains
        self.gain_change = gain_change


class UnstableClosedLoop(SolverError):
    pass


class DivisionByZero(SolverError, ZeroDivisionError):
    pass


class DefectiveSpectrum(UserWarning):
    """Repeated eigenvalues: the eigenvector method may miss equilibria."""
