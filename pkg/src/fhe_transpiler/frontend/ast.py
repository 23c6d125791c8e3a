"""Syntax tree. Expression nodes carry a ``type`` filled in by the resolver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..codec import Layout
from .diagnostics import Span


class _Untyped:
    """Type of an integer literal expression before it meets a typed operand."""

    def __repr__(self):
        return "untyped"

    def __str__(self):
        return "integer literal"


UNTYPED = _Untyped()


@dataclass(eq=False)
class TypeRef:
    name: str
    dims: list["Expr"]
    span: Span
    struct_keyword: bool = False


# --- expressions -----------------------------------------------------------

@dataclass(eq=False)
class Expr:
    span: Span
    type: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class IntLit(Expr):
    value: int


@dataclass(eq=False)
class BoolLit(Expr):
    value: bool


@dataclass(eq=False)
class Name(Expr):
    ident: str
    decl: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Index(Expr):
    base: Expr
    index: Expr
    dynamic: bool = field(default=False, init=False, repr=False)


@dataclass(eq=False)
class Field(Expr):
    base: Expr
    name: str


@dataclass(eq=False)
class Unary(Expr):
    op: str
    operand: Expr


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    operand_type: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Ternary(Expr):
    cond: Expr
    then: Expr
    else_: Expr


@dataclass(eq=False)
class Call(Expr):
    func: str
    args: list[Expr]
    target: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Cast(Expr):
    target_ref: TypeRef
    operand: Expr


@dataclass(eq=False)
class InitList(Expr):
    items: list[Expr]


# --- statements ------------------------------------------------------------

@dataclass(eq=False)
class Stmt:
    span: Span


@dataclass(eq=False)
class VarDecl(Stmt):
    type_ref: TypeRef
    name: str
    init: Optional[Expr]
    is_const: bool = False
    layout: Optional[Layout] = field(default=None, init=False, repr=False)
    const_value: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Assign(Stmt):
    target: Expr
    op: str  # "=" or a compound operator such as "+="
    value: Expr
    operand_type: Any = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class IncDec(Stmt):
    target: Expr
    op: str  # "++" | "--"


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class Block(Stmt):
    stmts: list[Stmt]


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Block
    else_: Optional[Block]


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    step: Optional[Stmt]
    body: Block
    counters: list[Any] = field(default_factory=list, init=False, repr=False)


@dataclass(eq=False)
class While(Stmt):
    cond: Expr
    body: Block
    do_while: bool = False


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr]
    ret_layout: Optional[Layout] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Jump(Stmt):
    kind: str  # "break" | "continue"


# --- declarations ----------------------------------------------------------

@dataclass(eq=False)
class Param:
    name: str
    type_ref: TypeRef
    span: Span
    layout: Optional[Layout] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Function:
    name: str
    ret_ref: TypeRef
    params: list[Param]
    body: Block
    span: Span
    ret: Optional[Layout] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class StructDecl:
    name: str
    fields: list[tuple[str, TypeRef, Span]]
    span: Span
    layout: Optional[Layout] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class Program:
    structs: dict[str, StructDecl]
    consts: dict[str, VarDecl]
    functions: dict[str, Function]
    source: str = ""
    order: list[tuple[str, Any]] = field(default_factory=list, repr=False)

    def param_layouts(self, entry: str) -> list[tuple[str, Layout]]:
        return [(p.name, p.layout) for p in self.functions[entry].params]
