"""Source language front end: parsing, checking and lowering to IR."""

from __future__ import annotations

from .ast import Program
from .diagnostics import CompileError, Diagnostic, Span
from .interp import interpret
from .lower import DEFAULT_NODE_LIMIT, lower_to_ir
from .parser import parse_syntax
from .resolver import resolve
from .restrictions import check_restrictions, lint


def parse(source: str) -> Program:
    """Parse and type-check ``source``; raises CompileError with diagnostics."""
    program = parse_syntax(source)
    errors = resolve(program)
    if errors:
        raise CompileError(errors)
    return program


def compile_program(source: str) -> Program:
    """Parse, type-check and enforce the restrictions (errors raise)."""
    program = parse(source)
    errors = check_restrictions(program)
    if errors:
        raise CompileError(errors)
    return program


__all__ = [
    "CompileError", "DEFAULT_NODE_LIMIT", "Diagnostic", "Program", "Span",
    "check_restrictions", "compile_program", "interpret", "lint", "lower_to_ir", "parse",
]
