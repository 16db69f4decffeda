"""Exception hierarchy shared by every deba module.

Errors are grouped the same way the CLI maps them to exit codes: argument
problems, file parsing, value/invariant validation, and plain I/O.
"""

from __future__ import annotations


class DebaError(Exception):
    """Base class for all errors raised by this package."""


# --------------------------------------------------------------------------
# validation errors (bad values, broken invariants, misuse of the API)
# --------------------------------------------------------------------------

class ValidationError(DebaError):
    """A value or state violates a documented invariant."""


class InvalidValue(ValidationError):
    """A named field holds a value outside its allowed range."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InitialBatchOutOfBounds(ValidationError):
    pass


class DegenerateGradient(ValidationError):
    """Gradient vector too short or containing non-finite components."""


class NonFiniteInput(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    """A trace or record value is NaN or infinite."""


class EmptyWindow(ValidationError):
    pass


class EpochMismatch(ValidationError):
    pass


class InsufficientEpochs(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class NonContiguousEpochs(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class ModelDomainError(ValidationError):
    """A batch size falls outside a table throughput model's range."""


# --------------------------------------------------------------------------
# parse errors (malformed files)
# --------------------------------------------------------------------------

class FileFormatError(DebaError):
    """Base for errors raised while parsing an on-disk artifact."""


class ParseError(FileFormatError):
    """Malformed content with a 1-based line and column location."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column

    @classmethod
    def at_line(cls, line: int, message: str) -> "ParseError":
        return cls(line, 1, message)


class UnknownVersion(FileFormatError):
    pass


class UnknownKey(FileFormatError):
    def __init__(self, key: str, line: int | None = None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown key {key!r}{loc}")
        self.key = key
        self.line = line


# --------------------------------------------------------------------------
# I/O
# --------------------------------------------------------------------------

class IoError(DebaError):
    """Filesystem failure wrapped so callers can map it to an exit code."""
