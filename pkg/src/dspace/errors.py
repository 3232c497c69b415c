"""Exception hierarchy shared by all dspace modules."""


class DspaceError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DspaceError):
    """Malformed document, DV text, or lexical value."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message)


class ValidationError(DspaceError):
    """Structurally parsed but semantically invalid input."""


class NotComparable(DspaceError):
    """A vector lacks a value on a dimension selected for comparison."""


class UnknownReference(DspaceError):
    """Unresolvable DSI, dimension path, column, or interval label."""


class FixedPartViolation(DspaceError):
    """Attempt to mutate the fixed part of a definition past draft state."""
