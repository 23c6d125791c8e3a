from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import SYNTAX, UNSUPPORTED_TYPE, CompileError, Span, error

OPERATORS = sorted("""
<<= >>= << >> <= >= == != && || ++ -- += -= *= /= %= &= |= ^= ->
+ - * / % & | ^ ~ ! < > = ? : ; , . ( ) { } [ ]
""".split(), key=len, reverse=True)

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)"
    r"|(?P<nl>\n)"
    r"|(?P<comment>//[^\n]*|/\*.*?\*/)"
    r"|(?P<pre>\#[^\n]*)"
    r"|(?P<float>\d+\.\d*|\.\d+)"
    r"|(?P<int>0[xX][0-9a-fA-F]+|0[bB][01]+|\d+)[uUlL]*"
    r"|(?P<char>'(?:\\.|[^'\\])')"
    r"|(?P<string>\"(?:\\.|[^\"\\])*\")"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>" + "|".join(re.escape(o) for o in OPERATORS) + ")",
    re.S,
)

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | op | eof
    text: str
    span: Span
    value: int | None = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        span = Span(line, pos - line_start + 1)
        if not m:
            raise CompileError([error(span, SYNTAX, f"unexpected character {source[pos]!r}")])
        kind = m.lastgroup
        text = m.group(0)
        if kind == "float":
            raise CompileError([error(span, UNSUPPORTED_TYPE, "floating point is unsupported")])
        if kind == "string":
            raise CompileError([error(span, SYNTAX, "string literals are unsupported; use fixed-size u8 arrays")])
        if kind == "int":
            tokens.append(Token("int", text, span, int(m.group("int"), 0)))
        elif kind == "char":
            body = text[1:-1]
            value = _ESCAPES.get(body[1], ord(body[1])) if body.startswith("\\") else ord(body)
            tokens.append(Token("int", text, span, value))
        elif kind in ("ident", "op"):
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens
