"""Exception hierarchy shared by the front end, checker and engine."""

from __future__ import annotations


class AfsError(Exception):
    """Base class for every diagnostic raised by the package."""


class ParseError(AfsError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class WellFormednessError(AfsError):
    """An interface would hold a name twice at a non-request type."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(message)


class StaleRedex(AfsError):
    """A redex was applied to a form it does not belong to (engine defect)."""


class ProgressViolation(AfsError):
    """A typed normal form is active but offers nothing to compose with."""


class EvalError(AfsError):
    """A ground expression could not be evaluated."""
