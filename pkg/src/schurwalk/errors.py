"""Exception hierarchy shared by all schurwalk modules."""

from __future__ import annotations


class SchurWalkError(Exception):
    """Base class for every error raised by this package."""


class GapClosedError(SchurWalkError, ValueError):
    """A boundary value was requested at a point where the essential gap closes."""

    def __init__(self, message: str, *, side: str | None = None, point: int | None = None):
        super().__init__(message)
        self.side = side
        self.point = point


class DivisionDegenerateError(SchurWalkError, ZeroDivisionError):
    """A Schur step or inverse step hit a vanishing denominator."""


class BranchAmbiguousError(SchurWalkError, ValueError):
    """Evaluation requested exactly at a branch point of the square root."""


class MassPointSingularError(SchurWalkError, ValueError):
    """``1 - z f(z)`` is singular, so the Caratheodory function has a pole."""


class InconsistentWindowError(SchurWalkError, ValueError):
    pass


class DimensionCapExceededError(SchurWalkError, ValueError):
    pass


class AngleOutOfRangeError(SchurWalkError, ValueError):
    pass


class CoinConstraintError(SchurWalkError, ValueError):
    """A coin block violates one of the chiral-coin identities."""

    def __init__(self, message: str, *, identity: str = "", violation: float = float("nan")):
        super().__init__(message)
        self.identity = identity
        self.violation = violation


class BoundViolatedError(SchurWalkError, ValueError):
    pass


class SymmetryViolatedError(SchurWalkError, ValueError):
    pass


class InconsistentRepresentationError(SchurWalkError, ValueError):
    pass


class WindowNotConvergedError(SchurWalkError, RuntimeError):
    pass


class NotCyclicError(SchurWalkError, ValueError):
    pass


class NoCandidateError(SchurWalkError, LookupError):
    pass


class SpecError(SchurWalkError, ValueError):
    """A walk-spec document failed to parse; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
