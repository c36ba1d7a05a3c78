"""Exception hierarchy shared by every service module.

Each exception class carries the exit code the command line tool returns for it.
"""
from __future__ import annotations

from typing import Optional


class SparseRecoveryError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class InvalidInputError(SparseRecoveryError, ValueError):
    """The caller supplied data that violates an operation's precondition."""

    exit_code = 1


class NotSymmetricError(InvalidInputError):
    pass


class ZeroColumnError(InvalidInputError):
    def __init__(self, index: int):
        super().__init__(f"La columna {index} tiene norma nula y no puede normalizarse.")
        self.index = index


class CsvParseError(InvalidInputError):
    def __init__(self, message: str, *, line: int, column: Optional[int] = None):
        location = f"línea {line}" if column is None else f"línea {line}, columna {column}"
        super().__init__(f"{message} ({location})")
        self.line = line
        self.column = column


class DimensionMismatchError(InvalidInputError):
    pass


class EmptyCandidateSetError(InvalidInputError):
    pass


class BoundViolatedError(InvalidInputError):
    pass


class HypothesisViolatedError(InvalidInputError):
    pass


class NumericalError(SparseRecoveryError, ArithmeticError):
    """A numerical routine could not produce a trustworthy answer."""

    exit_code = 2


class RankDeficientError(NumericalError):
    pass


class NoConvergenceError(NumericalError):
    pass


class SpectrumMismatchError(NumericalError):
    pass


class GuardExceededError(SparseRecoveryError):
    """An enumeration or experiment is larger than the configured desk-scale guard."""

    exit_code = 3


class TooManySubsetsError(GuardExceededError):
    def __init__(self, requested: int, limit: int):
        super().__init__(
            f"Se requieren {requested} subconjuntos y el límite es {limit}; reduzca n o el orden."
        )
        self.requested = requested
        self.limit = limit
