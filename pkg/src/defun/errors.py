"""Shared error types and source locations."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0

    def __str__(self):
        return f"{self.line}:{self.col}"


class SourceError(Exception):
    """Base for all errors that point back into the source text."""

    def __init__(self, message: str, loc: Loc | None = None):
        self.message = message
        self.loc = loc or Loc()
        super().__init__(f"{self.loc}: {message}")


class LexError(SourceError):
    pass


class ParseError(SourceError):
    def __init__(self, message, loc=None, expected=None, found=None):
        super().__init__(message, loc)
        self.expected = expected or set()
        self.found = found


class TypeError_(SourceError):
    """Type checking failure; `kind` is a stable diagnostic tag."""

    def __init__(self, kind: str, message: str, loc=None):
        super().__init__(message, loc)
        self.kind = kind


class TransformError(SourceError):
    """Defunctionalization failure (no-family, exempt-as-value, ...)."""

    def __init__(self, kind: str, message: str, loc=None):
        super().__init__(message, loc)
        self.kind = kind


class VCError(SourceError):
    pass
