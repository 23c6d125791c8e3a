"""Compiler diagnostics and restriction codes."""

from __future__ import annotations

from dataclasses import dataclass

# syntax / semantic errors
SYNTAX = "SYNTAX"
UNKNOWN_TYPE = "UNKNOWN_TYPE"
UNSUPPORTED_TYPE = "UNSUPPORTED_TYPE"
UNKNOWN_SYMBOL = "UNKNOWN_SYMBOL"
DUPLICATE_SYMBOL = "DUPLICATE_SYMBOL"
TYPE_MISMATCH = "TYPE_MISMATCH"
NOT_CONSTANT = "NOT_CONSTANT"
INDEX_OUT_OF_BOUNDS = "INDEX_OUT_OF_BOUNDS"
CIRCUIT_TOO_LARGE = "CIRCUIT_TOO_LARGE"
UNKNOWN_ENTRY = "UNKNOWN_ENTRY"

# data-independence restrictions
POINTER = "POINTER"
VARIABLE_LENGTH_ARRAY = "VARIABLE_LENGTH_ARRAY"
VARIABLE_LOOP_BOUND = "VARIABLE_LOOP_BOUND"
UNBOUNDED_LOOP = "UNBOUNDED_LOOP"
LOOP_COUNTER_MODIFIED = "LOOP_COUNTER_MODIFIED"
RECURSION = "RECURSION"
UNSUPPORTED_CONTROL = "UNSUPPORTED_CONTROL"

# warnings
DYNAMIC_INDEX = "DYNAMIC_INDEX"
MISSING_RETURN = "MISSING_RETURN"


@dataclass(frozen=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    span: Span
    code: str
    message: str

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.severity}[{self.code}]: {self.message}"

    def __str__(self):
        return self.format()


def error(span: Span, code: str, message: str) -> Diagnostic:
    return Diagnostic("error", span, code, message)


def warning(span: Span, code: str, message: str) -> Diagnostic:
    return Diagnostic("warning", span, code, message)


class CompileError(Exception):
    """Raised when compilation cannot proceed; carries the diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]
