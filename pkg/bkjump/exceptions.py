# bkjump/exceptions.py
from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .terms import PredicateIndicator, Term


class BkJumpError(Exception):
    """Base class for exceptions in the bkjump library."""
    pass


class InvalidArgumentError(BkJumpError):
    """Raised for invalid arguments to functions/methods."""
    pass


class PrologSyntaxError(BkJumpError):
    """Raised when program or term text does not follow the grammar."""

    def __init__(self, message: str, line: int, column: int, expected: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        super().__init__(str(self))

    def __str__(self):
        text = f"line {self.line}, column {self.column}: {self.message}"
        if self.expected:
            text += f" (expected {self.expected})"
        return text


class TransformError(BkJumpError):
    """Raised when a source-to-source transformation cannot be applied."""

    def __init__(self, message: str, indicator: str | None = None, clause_number: int | None = None):
        self.message = message
        self.indicator = indicator
        self.clause_number = clause_number
        super().__init__(str(self))

    def __str__(self):
        where = []
        if self.indicator:
            where.append(self.indicator)
        if self.clause_number is not None:
            where.append(f"clause {self.clause_number}")
        return f"{', '.join(where)}: {self.message}" if where else self.message


class EngineError(BkJumpError):
    """Raised for engine failures that are not Prolog exceptions."""
    pass


class UnknownPredicateError(EngineError):
    """Raised when a goal calls a predicate with no clauses and no built-in."""

    def __init__(self, indicator: str):
        self.indicator = indicator
        super().__init__(f"unknown predicate {indicator}")


class MarkerLeakError(EngineError):
    """Raised when a reserved transformation marker reaches the engine."""

    def __init__(self, indicator: str):
        self.indicator = indicator
        super().__init__(f"reserved marker {indicator} reached the engine; transform the program first")


class StaleMarkError(EngineError):
    """Raised when a trail mark points past the current trail (internal error)."""
    pass


class TraceWriteError(EngineError):
    """Raised when a trace sink cannot record an event."""
    pass


class CyclicTermError(BkJumpError):
    """Raised when dereferencing a term runs into a binding cycle or the depth cap."""
    pass


class TraceFormatError(BkJumpError):
    """Raised when a trace log is malformed or badly nested."""
    pass


class DimacsParseError(BkJumpError):
    """Raised when DIMACS CNF text is malformed."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class OracleRefusedError(BkJumpError):
    """Raised when the brute-force oracle is asked for too many variables."""
    pass


class PrologThrow(Exception):
    """Carries a ball from throw/1 (or a failing built-in) to the nearest catch/3."""

    def __init__(self, ball: Term, culprit: PredicateIndicator | None = None):
        self.ball = ball
        self.culprit = culprit
        super().__init__(ball)

