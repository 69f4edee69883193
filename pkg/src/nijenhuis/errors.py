"""Exception hierarchy shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


class NijenhuisError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NijenhuisError, ValueError):
    """Arithmetic evaluated outside its domain (pole, log of a non-positive value)."""

    def __init__(self, message: str, subexpr: str | None = None, point=None):
        self.subexpr = subexpr
        self.point = point
        detail = message
        if subexpr is not None:
            detail += f" in '{subexpr}'"
        if point is not None:
            detail += f" at point {list(map(float, point))}"
        super().__init__(detail)


class DimensionError(NijenhuisError, ValueError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    """Half-open offsets ``[start, end)`` into the parsed source text."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span {self.start}..{self.end}")


class ParseError(NijenhuisError):
    def __init__(self, message: str, span: SourceSpan, text: str = ""):
        self.span = span
        self.text = text
        self.reason = message
        super().__init__(f"{message} at {span.start}..{span.end}: {text!r}")


class UnknownIdentifier(ParseError):
    pass


class UnknownFunction(ParseError):
    pass


class PreconditionError(NijenhuisError):
    pass


class InvalidAlgebra(NijenhuisError):
    """Structure constants or homogeneous data that violate an algebraic law.

    ``witness`` holds the offending index tuple (0-based).
    """

    def __init__(self, message: str, witness: tuple = ()):
        self.witness = witness
        super().__init__(message)


class ProblemError(NijenhuisError):
    """A problem file that cannot be resolved (missing names, bad schema)."""
