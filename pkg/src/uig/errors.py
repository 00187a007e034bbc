"""Exception hierarchy shared by every subsystem."""

from __future__ import annotations


class UiGError(Exception):
    """Base class for all errors raised by this package."""


class BackendFailure(UiGError):
    """A backend call failed after the retry policy was exhausted."""

    def __init__(self, message: str, *, status: int | None = None,
                 code: str | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.code = code
        self.attempts = attempts


class MediaMismatch(UiGError):
    """An image of the wrong media kind was handed to a backend or judge."""


class UnparseableVerdict(UiGError):
    """The understanding response carries no usable MATCH line."""


class MissingEditPrompt(UiGError):
    """A "No" verdict arrived without an EDIT line under the strict policy."""


class InconsistentTrace(UiGError):
    """A sequence of reasoning steps violates the loop semantics."""


class UnparseableEditInstruction(UiGError):
    """The simulator editor could not make sense of an instruction."""


class TraceSchemaError(UiGError):
    """A persisted trace document is malformed or has an unknown version."""


class NotFound(UiGError, KeyError):
    """A content address is not present in the store."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else "not found"


class SchemaError(UiGError, ValueError):
    """A suite or report record failed validation."""

    def __init__(self, message: str, *, index: int | None = None):
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)
        self.index = index


class DSLError(UiGError, ValueError):
    """Base for prompt-DSL errors; carries a 1-based line and column."""

    def __init__(self, message: str, *, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DSLSyntaxError(DSLError):
    pass


class VocabularyError(DSLError):
    pass


class EditScriptError(UiGError, ValueError):
    """Text is not a valid canonical edit script."""
