"""Tree-walking reference interpreter over plaintext integers.

It executes programs the ordinary way: real branches, real loops and real
early returns. That makes it an independent oracle for the lowered IR, which
has none of those. The same expression evaluator, given a lookup that only
knows compile-time constants, is used for static evaluation.
"""

from __future__ import annotations

from typing import Any, Callable

from ..codec import Array, BOOL, Layout, Scalar, Struct
from . import ast as A
from . import semantics as S
from .ast import UNTYPED

MAX_TRIP_COUNT = 1 << 20


class NotStatic(Exception):
    """Expression depends on a value that is not known at compile time."""


class InterpError(RuntimeError):
    pass


def zero_value(layout: Layout) -> Any:
    if isinstance(layout, Scalar):
        return 0
    if isinstance(layout, Array):
        return [zero_value(layout.elem) for _ in range(layout.length)]
    return {name: zero_value(sub) for name, sub in layout.fields}


def to_natural(value: Any, layout: Layout) -> Any:
    if isinstance(layout, Scalar):
        return S.natural(value, layout)
    if isinstance(layout, Array):
        return [to_natural(v, layout.elem) for v in value]
    return {name: to_natural(value[name], sub) for name, sub in layout.fields}


def from_natural(value: Any, layout: Layout) -> Any:
    if isinstance(layout, Scalar):
        return S.from_natural(int(value), layout)
    if isinstance(layout, Array):
        if isinstance(value, (str, bytes)):
            from ..codec import pad_string
            value = pad_string(value, layout.length)
        if len(value) != layout.length:
            raise ValueError(f"expected {layout.length} elements, got {len(value)}")
        return [from_natural(v, layout.elem) for v in value]
    return {name: from_natural(value[name], sub) for name, sub in layout.fields}


def truthy(value: int, ty) -> bool:
    return value != 0


class Evaluator:
    """Evaluates typed expressions; ``lookup`` resolves a Name node."""

    def __init__(self, lookup: Callable[[A.Name], Any],
                 call: Callable[[A.Call, list[Any]], Any] | None = None):
        self.lookup = lookup
        self.call = call

    def eval(self, e: A.Expr) -> Any:
        method = getattr(self, "_" + type(e).__name__)
        return method(e)

    def eval_as(self, e: A.Expr, ty: Layout) -> Any:
        """Evaluate and convert to ``ty`` (implicit conversion)."""
        if isinstance(e, A.InitList):
            return self.init_value(e, ty)
        v = self.eval(e)
        if isinstance(ty, Scalar):
            return S.convert(v, e.type, ty)
        return v

    def init_value(self, e: A.InitList, layout: Layout) -> Any:
        value = zero_value(layout)
        if isinstance(layout, Array):
            for i, item in enumerate(e.items):
                value[i] = self.eval_as(item, layout.elem)
        else:
            for (name, sub), item in zip(layout.fields, e.items):
                value[name] = self.eval_as(item, sub)
        return value

    def _IntLit(self, e):
        return e.value

    def _BoolLit(self, e):
        return int(e.value)

    def _Name(self, e):
        return self.lookup(e)

    def _Index(self, e):
        base = self.eval(e.base)
        idx = self.index_value(e.index)
        if 0 <= idx < len(base):
            return base[idx]
        return zero_value(e.type)

    def index_value(self, e: A.Expr) -> int:
        # typed indices are read as unsigned bit patterns
        return self.eval(e)

    def _Field(self, e):
        return self.eval(e.base)[e.name]

    def _Unary(self, e):
        v = self.eval(e.operand)
        if e.op == "!":
            return S.unary("!", v, e.operand.type)
        return S.unary(e.op, S.convert(v, e.operand.type, e.type), e.type)

    def _Binary(self, e):
        if e.op in ("&&", "||"):
            a = S.convert(self.eval(e.left), e.left.type, BOOL)
            b = S.convert(self.eval(e.right), e.right.type, BOOL)
            return a & b if e.op == "&&" else a | b
        if e.op in ("<<", ">>"):
            a = S.convert(self.eval(e.left), e.left.type, e.type)
            return S.shift(e.op, a, self.eval(e.right), e.type)
        a = S.convert(self.eval(e.left), e.left.type, e.operand_type)
        b = S.convert(self.eval(e.right), e.right.type, e.operand_type)
        return S.binary(e.op, a, b, e.operand_type)

    def _Ternary(self, e):
        c = S.convert(self.eval(e.cond), e.cond.type, BOOL)
        then, else_ = self.eval_as(e.then, e.type), self.eval_as(e.else_, e.type)
        return then if c else else_

    def _Cast(self, e):
        return S.convert(self.eval(e.operand), e.operand.type, e.type)

    def _Call(self, e):
        if self.call is None:
            raise NotStatic(e)
        fn = e.target
        args = [self.eval_as(a, p.layout) for a, p in zip(e.args, fn.params)]
        return self.call(e, args)

    def _InitList(self, e):
        raise NotStatic(e)


def static_value(e: A.Expr, lookup: Callable[[A.Name], Any] | None = None) -> int:
    """Value of a compile-time constant expression, or raise NotStatic."""

    def default_lookup(name: A.Name):
        decl = name.decl
        if isinstance(decl, A.VarDecl) and decl.is_const and decl.const_value is not None:
            return decl.const_value
        raise NotStatic(name)

    return Evaluator(lookup or default_lookup).eval(e)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    def __init__(self, program: A.Program, max_trip: int = MAX_TRIP_COUNT):
        self.program = program
        self.max_trip = max_trip

    def run(self, entry: str, args: dict[str, Any]) -> Any:
        fn = self.program.functions[entry]
        values = []
        for p in fn.params:
            if p.name not in args:
                raise InterpError(f"missing argument {p.name}")
            values.append(from_natural(args[p.name], p.layout))
        return to_natural(self.call_function(fn, values), fn.ret)

    def call_function(self, fn: A.Function, args: list[Any]) -> Any:
        frame: dict[Any, Any] = {p: v for p, v in zip(fn.params, args)}

        def lookup(name: A.Name):
            decl = name.decl
            if isinstance(decl, A.VarDecl) and decl.is_const and decl not in frame:
                return decl.const_value
            return frame[decl]

        ev = Evaluator(lookup, lambda call, a: self.call_function(call.target, a))
        try:
            self.exec_block(fn.body, frame, ev)
        except _Return as r:
            return r.value
        return zero_value(fn.ret)

    def exec_block(self, block: A.Block, frame, ev: Evaluator):
        for stmt in block.stmts:
            self.exec_stmt(stmt, frame, ev)

    def exec_stmt(self, s: A.Stmt, frame, ev: Evaluator):
        if isinstance(s, A.VarDecl):
            if s.is_const and s.const_value is not None:
                frame[s] = s.const_value
            else:
                frame[s] = ev.eval_as(s.init, s.layout) if s.init is not None else zero_value(s.layout)
        elif isinstance(s, A.Assign):
            target_ty = s.target.type
            if s.op == "=":
                value = ev.eval_as(s.value, target_ty)
            else:
                value = self._compound(s, ev)
            self.store(s.target, value, frame, ev)
        elif isinstance(s, A.IncDec):
            ty = s.target.type
            old = ev.eval(s.target)
            value = S.binary("+" if s.op == "++" else "-", old, 1 & S.mask(ty.width), ty)
            self.store(s.target, value, frame, ev)
        elif isinstance(s, A.ExprStmt):
            ev.eval(s.expr)
        elif isinstance(s, A.Block):
            self.exec_block(s, frame, ev)
        elif isinstance(s, A.If):
            if truthy(ev.eval(s.cond), s.cond.type):
                self.exec_block(s.then, frame, ev)
            elif s.else_ is not None:
                self.exec_block(s.else_, frame, ev)
        elif isinstance(s, A.For):
            if s.init is not None:
                self.exec_stmt(s.init, frame, ev)
            trips = 0
            while s.cond is None or truthy(ev.eval(s.cond), s.cond.type):
                trips += 1
                if trips > self.max_trip:
                    raise InterpError("loop trip count exceeds limit")
                self.exec_block(s.body, frame, ev)
                if s.step is not None:
                    self.exec_stmt(s.step, frame, ev)
        elif isinstance(s, A.While):
            trips = 0
            while True:
                if not s.do_while or trips:
                    if not truthy(ev.eval(s.cond), s.cond.type):
                        break
                trips += 1
                if trips > self.max_trip:
                    raise InterpError("loop trip count exceeds limit")
                self.exec_block(s.body, frame, ev)
        elif isinstance(s, A.Return):
            raise _Return(ev.eval_as(s.value, self._current_ret(s)))
        else:
            raise InterpError(f"unsupported statement {type(s).__name__}")

    def _current_ret(self, s: A.Return) -> Layout:
        return s.ret_layout

    def _compound(self, s: A.Assign, ev: Evaluator) -> int:
        op = s.op[:-1]
        ty = s.target.type
        old = ev.eval(s.target)
        if op in ("<<", ">>"):
            return S.shift(op, old, ev.eval(s.value), ty)
        a = S.convert(old, ty, s.operand_type)
        b = S.convert(ev.eval(s.value), s.value.type, s.operand_type)
        return S.convert(S.binary(op, a, b, s.operand_type), s.operand_type, ty)

    def store(self, target: A.Expr, value: Any, frame, ev: Evaluator):
        if isinstance(target, A.Name):
            frame[target.decl] = value
            return
        base = ev.eval(target.base)
        if isinstance(target, A.Index):
            idx = ev.index_value(target.index)
            if not 0 <= idx < len(base):
                return
            new = list(base)
            new[idx] = value
        else:
            new = dict(base)
            new[target.name] = value
        self.store(target.base, new, frame, ev)


def interpret(program: A.Program, entry: str, args: dict[str, Any]) -> Any:
    """Run ``entry`` on natural Python values and return its natural result."""
    return Interpreter(program).run(entry, args)
