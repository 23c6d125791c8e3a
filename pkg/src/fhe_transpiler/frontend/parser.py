"""Recursive-descent parser for the C-flavoured source language."""

from __future__ import annotations

import re

from . import ast as A
from .diagnostics import POINTER, SYNTAX, UNSUPPORTED_TYPE, CompileError, error
from .lexer import Token, tokenize

SCALAR_ALIASES = {
    "bool": "bool", "int": "i32", "unsigned": "u32", "char": "u8", "short": "i16", "long": "i64",
    "uint8_t": "u8", "uint16_t": "u16", "uint32_t": "u32", "uint64_t": "u64",
    "int8_t": "i8", "int16_t": "i16", "int32_t": "i32", "int64_t": "i64",
}
UNSUPPORTED_TYPES = {"float", "double", "void"}
_SIZED = re.compile(r"[ui]\d+$")

ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}

BINARY_PRECEDENCE = [
    ["||"], ["&&"], ["|"], ["^"], ["&"], ["==", "!="],
    ["<", "<=", ">", ">="], ["<<", ">>"], ["+", "-"], ["*", "/", "%"],
]


def is_scalar_name(name: str) -> bool:
    return name in SCALAR_ALIASES or bool(_SIZED.match(name))


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.i = 0
        self.structs: set[str] = set()

    # -- token helpers ----------------------------------------------------
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("op", "ident") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def fail(self, message: str, tok: Token | None = None, code: str = SYNTAX):
        tok = tok or self.peek()
        if tok.kind == "eof" and code == SYNTAX:
            message = f"{message} (found end of input)"
        elif code == SYNTAX:
            message = f"{message} (found {tok.text!r})"
        raise CompileError([error(tok.span, code, message)])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.next()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail("expected identifier")
        return self.next()

    # -- types -------------------------------------------------------------
    def is_type_start(self, k: int = 0) -> bool:
        tok = self.peek(k)
        if tok.kind != "ident":
            return False
        return (tok.text in ("struct", "const") or is_scalar_name(tok.text)
                or tok.text in self.structs or tok.text in UNSUPPORTED_TYPES)

    def parse_type(self) -> A.TypeRef:
        tok = self.peek()
        struct_kw = self.accept("struct")
        name_tok = self.ident()
        if name_tok.text in UNSUPPORTED_TYPES:
            what = "floating point is" if name_tok.text != "void" else "void functions are"
            self.fail(f"{what} unsupported", name_tok, UNSUPPORTED_TYPE)
        if name_tok.text == "unsigned" and self.at("int"):
            self.next()
        self._reject_pointer()
        ref = A.TypeRef(name_tok.text, [], tok.span, struct_kw)
        while self.at("["):
            ref.dims.append(self._dim())
        self._reject_pointer()
        return ref

    def _reject_pointer(self):
        if self.at("*") or self.at("&"):
            self.fail("pointer types unsupported", self.peek(), POINTER)

    def _dim(self) -> A.Expr:
        tok = self.expect("[")
        if self.at("]"):
            self.fail("array length must be given", tok)
        e = self.parse_expr()
        self.expect("]")
        return e

    def declarator_dims(self, ref: A.TypeRef) -> A.TypeRef:
        dims = []
        while self.at("["):
            dims.append(self._dim())
        if not dims:
            return ref
        return A.TypeRef(ref.name, dims + ref.dims, ref.span, ref.struct_keyword)

    # -- top level ---------------------------------------------------------
    def parse_program(self) -> A.Program:
        prog = A.Program({}, {}, {}, self.source)
        order = prog.order
        while self.peek().kind != "eof":
            if self.at("struct") and self.peek(1).kind == "ident" and self.at("{", 2):
                s = self.parse_struct()
                order.append(("struct", s))
            elif self.at("const"):
                d = self.parse_declaration(allow_multi=False)[0]
                self.expect(";")
                order.append(("const", d))
            else:
                ref = self.parse_type()
                name = self.ident()
                if not self.at("("):
                    self.fail("expected '(' after function name (global variables must be const)")
                order.append(("function", self.parse_function(ref, name)))
        return prog

    def parse_struct(self) -> A.StructDecl:
        start = self.expect("struct")
        name = self.ident()
        self.structs.add(name.text)
        self.expect("{")
        fields = []
        while not self.accept("}"):
            ref = self.parse_type()
            fname = self.ident()
            ref = self.declarator_dims(ref)
            fields.append((fname.text, ref, fname.span))
            while self.accept(","):
                fname = self.ident()
                fields.append((fname.text, self.declarator_dims(A.TypeRef(ref.name, [], ref.span, ref.struct_keyword)), fname.span))
            self.expect(";")
        self.accept(";")
        return A.StructDecl(name.text, fields, start.span)

    def parse_function(self, ref: A.TypeRef, name: Token) -> A.Function:
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pref = self.parse_type()
                pname = self.ident()
                params.append(A.Param(pname.text, self.declarator_dims(pref), pname.span))
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.parse_block()
        return A.Function(name.text, ref, params, body, name.span)

    # -- statements --------------------------------------------------------
    def parse_block(self) -> A.Block:
        start = self.expect("{")
        stmts = []
        while not self.accept("}"):
            if self.peek().kind == "eof":
                self.fail("expected '}'")
            stmts.extend(self.parse_stmt())
        return A.Block(start.span, stmts)

    def parse_body(self) -> A.Block:
        if self.at("{"):
            return self.parse_block()
        tok = self.peek()
        return A.Block(tok.span, self.parse_stmt())

    def parse_stmt(self) -> list[A.Stmt]:
        tok = self.peek()
        if self.at("{"):
            return [self.parse_block()]
        if self.at(";"):
            self.next()
            return []
        if self.accept("if"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_body()
            else_ = self.parse_body() if self.accept("else") else None
            return [A.If(tok.span, cond, then, else_)]
        if self.accept("for"):
            self.expect("(")
            init = None if self.at(";") else self.parse_simple()
            self.expect(";")
            cond = None if self.at(";") else self.parse_expr()
            self.expect(";")
            step = None if self.at(")") else self.parse_simple()
            self.expect(")")
            return [A.For(tok.span, init, cond, step, self.parse_body())]
        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            return [A.While(tok.span, cond, self.parse_body())]
        if self.accept("do"):
            body = self.parse_body()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return [A.While(tok.span, cond, body, do_while=True)]
        if self.accept("return"):
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return [A.Return(tok.span, value)]
        if self.at("break") or self.at("continue"):
            self.next()
            self.expect(";")
            return [A.Jump(tok.span, tok.text)]
        if self._looks_like_declaration():
            decls = self.parse_declaration(allow_multi=True)
            self.expect(";")
            return decls
        stmt = self.parse_simple()
        self.expect(";")
        return [stmt]

    def _looks_like_declaration(self) -> bool:
        if self.is_type_start():
            return True
        if self.peek().kind == "ident" and self.peek(1).kind == "ident":
            return True  # unknown type name; the resolver reports it
        if (self.peek().kind == "ident" and self.at("*", 1) and self.peek(2).kind == "ident"
                and (self.at(";", 3) or self.at("=", 3) or self.at(",", 3))):
            self.fail("pointer types unsupported", self.peek(1), POINTER)
        return False

    def parse_declaration(self, allow_multi: bool) -> list[A.Stmt]:
        is_const = self.accept("const")
        base = self.parse_type()
        decls = []
        while True:
            name = self.ident()
            ref = self.declarator_dims(base)
            init = self.parse_initializer() if self.accept("=") else None
            decls.append(A.VarDecl(name.span, ref, name.text, init, is_const))
            if not (allow_multi and self.accept(",")):
                break
        return decls

    def parse_initializer(self) -> A.Expr:
        if self.at("{"):
            tok = self.next()
            items = []
            while not self.at("}"):
                items.append(self.parse_initializer())
                if not self.accept(","):
                    break
            self.expect("}")
            return A.InitList(tok.span, items)
        return self.parse_expr()

    def parse_simple(self) -> A.Stmt:
        tok = self.peek()
        if self._looks_like_declaration():
            decls = self.parse_declaration(allow_multi=False)
            return decls[0]
        if self.at("++") or self.at("--"):
            op = self.next().text
            return A.IncDec(tok.span, self.parse_postfix(), op)
        expr = self.parse_expr()
        if self.peek().kind == "op" and self.peek().text in ASSIGN_OPS:
            op = self.next().text
            value = self.parse_initializer() if op == "=" else self.parse_expr()
            self._check_lvalue(expr)
            return A.Assign(tok.span, expr, op, value)
        if self.at("++") or self.at("--"):
            op = self.next().text
            self._check_lvalue(expr)
            return A.IncDec(tok.span, expr, op)
        return A.ExprStmt(tok.span, expr)

    def _check_lvalue(self, e: A.Expr):
        while isinstance(e, (A.Index, A.Field)):
            e = e.base
        if not isinstance(e, A.Name):
            raise CompileError([error(e.span, SYNTAX, "assignment target must be a variable, element or field")])

    # -- expressions -------------------------------------------------------
    def parse_expr(self) -> A.Expr:
        cond = self.parse_binary(0)
        if self.at("?"):
            tok = self.next()
            then = self.parse_expr()
            self.expect(":")
            else_ = self.parse_expr()
            return A.Ternary(tok.span, cond, then, else_)
        return cond

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(BINARY_PRECEDENCE):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        ops = BINARY_PRECEDENCE[level]
        while self.peek().kind == "op" and self.peek().text in ops:
            tok = self.next()
            right = self.parse_binary(level + 1)
            left = A.Binary(tok.span, tok.text, left, right)
        return left

    def parse_unary(self) -> A.Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "~", "!", "+"):
            self.next()
            operand = self.parse_unary()
            return operand if tok.text == "+" else A.Unary(tok.span, tok.text, operand)
        if tok.kind == "op" and tok.text in ("&", "*"):
            self.fail("pointers are unsupported (address-of and dereference)", tok, POINTER)
        if self.at("(") and self.is_type_start(1) and not self.at("const", 1):
            self.next()
            ref = self.parse_type()
            self.expect(")")
            return A.Cast(tok.span, ref, self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        e = self.parse_primary()
        while True:
            tok = self.peek()
            if self.accept("["):
                idx = self.parse_expr()
                self.expect("]")
                e = A.Index(tok.span, e, idx)
            elif self.accept("."):
                e = A.Field(tok.span, e, self.ident().text)
            elif self.at("->"):
                self.fail("pointers are unsupported ('->')", tok, POINTER)
            else:
                return e

    def parse_primary(self) -> A.Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return A.IntLit(tok.span, tok.value)
        if tok.kind == "ident":
            if tok.text in ("true", "false"):
                self.next()
                return A.BoolLit(tok.span, tok.text == "true")
            self.next()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept(","):
                            break
                self.expect(")")
                return A.Call(tok.span, tok.text, args)
            return A.Name(tok.span, tok.text)
        if self.accept("("):
            e = self.parse_expr()
            self.expect(")")
            return e
        self.fail("expected expression")


def parse_syntax(source: str) -> A.Program:
    """Syntax only: build the tree without resolving names or types."""
    return Parser(source).parse_program()
