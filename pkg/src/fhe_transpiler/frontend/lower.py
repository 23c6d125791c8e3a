"""Lowering of a checked program to the multi-bit IR.

Loops are unrolled by running them at compile time, calls are inlined, and
every ``if`` whose condition depends on inputs has both arms lowered and
merged with SELECT nodes. Return sites are collected as (predicate, value)
pairs and merged into one output by a select chain in the order they were
reached, so the earliest return on any path wins.

Scalars are held either as :class:`Const` (known at compile time) or
:class:`Wire` (an IR node). Operations on constants are evaluated directly;
nothing else is simplified here, so the optimizer has real work to do.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .. import ir
from ..codec import Array, BOOL, Layout, Scalar
from . import ast as A
from . import diagnostics as D
from . import semantics as S
from .ast import UNTYPED
from .interp import MAX_TRIP_COUNT

DEFAULT_NODE_LIMIT = 1_000_000


@dataclass(frozen=True)
class Const:
    value: int
    type: Any


@dataclass(frozen=True)
class Wire:
    id: int
    type: Scalar


class _Abort(Exception):
    def __init__(self, diag: D.Diagnostic):
        self.diag = diag


def _zero(layout: Layout):
    if isinstance(layout, Scalar):
        return Const(0, layout)
    if isinstance(layout, Array):
        return [_zero(layout.elem) for _ in range(layout.length)]
    return {name: _zero(sub) for name, sub in layout.fields}


class _Frame:
    """Lowering state of one inlined function body."""

    def __init__(self, env: dict):
        self.env = env
        self.pred: tuple = ()  # (condition, polarity) terms, materialized at returns
        self.returns: list[tuple[Wire | None, Any]] = []
        self.done = False


class Lowerer:
    def __init__(self, program: A.Program, name: str, node_limit: int | None):
        self.program = program
        self.b = ir.IRBuilder(name, node_limit=node_limit)
        self.frame: _Frame | None = None

    def fail(self, span, code, message):
        raise _Abort(D.error(span, code, message))

    # -- node helpers --------------------------------------------------------
    def emit(self, kind, operands, width, attr=None) -> int:
        return self.b.emit(kind, operands, width, attr)

    def node(self, v) -> int:
        if isinstance(v, Wire):
            return v.id
        return self.b.literal(v.value, v.type.width)

    def conv(self, v, dst):
        """Implicit or explicit scalar conversion, mirroring ``semantics.convert``."""
        src = v.type
        if dst is UNTYPED or src == dst:
            return v
        if isinstance(v, Const):
            return Const(S.convert(v.value, src, dst), dst)
        if dst.boolean and not src.boolean:
            zero = self.b.literal(0, src.width)
            return Wire(self.emit("NE", (v.id, zero), 1), dst)
        if dst.width == src.width:
            return Wire(v.id, dst)
        if dst.width < src.width:
            return Wire(self.emit("SLICE", (v.id,), dst.width, 0), dst)
        kind = "SEXT" if src.signed else "ZEXT"
        return Wire(self.emit(kind, (v.id,), dst.width), dst)

    def select(self, cond, then, else_):
        """Leaf-wise choice between two values of one layout."""
        if isinstance(then, list):
            return [self.select(cond, t, e) for t, e in zip(then, else_)]
        if isinstance(then, dict):
            return {k: self.select(cond, then[k], else_[k]) for k in then}
        if isinstance(cond, Const):
            return then if cond.value else else_
        if then == else_:
            return then
        ty = then.type
        return Wire(self.emit("SELECT", (cond.id, self.node(then), self.node(else_)), ty.width), ty)

    def path_condition(self):
        cond = None
        for c, polarity in self.frame.pred:
            term = c if polarity else self.logic("NOT", c)
            cond = self.logic("AND", cond, term)
        return cond

    def logic(self, kind, a, b=None):
        """1-bit logic on predicates; None stands for 'always true'."""
        if kind == "NOT":
            if isinstance(a, Const):
                return Const(1 - a.value, BOOL)
            return Wire(self.emit("NOT", (a.id,), 1), BOOL)
        if a is None:
            return b
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(a.value & b.value, BOOL)
        return Wire(self.emit("AND", (self.node(a), self.node(b)), 1), BOOL)

    # -- operators -----------------------------------------------------------
    def binop(self, op: str, a, b, ty):
        """Arithmetic / bitwise / comparison on operands already of type ``ty``."""
        if isinstance(a, Const) and isinstance(b, Const):
            try:
                return Const(S.binary(op, a.value, b.value, ty), BOOL if op in _CMP else ty)
            except S.ConstantError as exc:
                self.fail(None, D.NOT_CONSTANT, str(exc))
        x, y = self.node(a), self.node(b)
        if op in _CMP:
            if op in (">", ">="):
                x, y = y, x
                op = "<" if op == ">" else "<="
            if op in ("==", "!="):
                kind = "EQ" if op == "==" else "NE"
            else:
                kind = ("S" if ty.signed else "U") + ("LT" if op == "<" else "LE")
            return Wire(self.emit(kind, (x, y), 1), BOOL)
        kind = _ARITH[op]
        if op in ("/", "%") and ty.signed:
            kind = "S" + kind[1:]
        return Wire(self.emit(kind, (x, y), ty.width), ty)

    def shift(self, op: str, a, amount, ty):
        if isinstance(amount, Const):
            n = amount.value
            if n < 0:
                self.fail(None, D.TYPE_MISMATCH, f"negative shift amount {n}")
            if isinstance(a, Const):
                return Const(S.shift(op, a.value, n, ty), ty)
            return self.shift_const(op, a, n, ty)
        w = ty.width
        cur = a
        aw = amount.type.width
        stage = 0
        while stage < aw and (1 << stage) < w:
            bit = Wire(self.emit("SLICE", (amount.id,), 1, stage), BOOL)
            cur = self.select(bit, self.shift_const(op, cur, 1 << stage, ty), cur)
            stage += 1
        if stage < aw:
            high = self.emit("SLICE", (amount.id,), aw - stage, stage)
            zero = self.b.literal(0, aw - stage)
            big = Wire(self.emit("NE", (high, zero), 1), BOOL)
            fill = self.shift_const(op, a, w, ty)
            cur = self.select(big, fill, cur)
        return cur

    def shift_const(self, op, a, n, ty):
        w = ty.width
        if isinstance(a, Const):
            return Const(S.shift(op, a.value, n, ty), ty)
        if n == 0:
            return a
        if op == "<<":
            if n >= w:
                return Const(0, ty)
            return Wire(self.emit("SHL_CONST", (a.id,), w, n), ty)
        if not ty.signed:
            if n >= w:
                return Const(0, ty)
            return Wire(self.emit("SHR_CONST", (a.id,), w, n), ty)
        n = min(n, w - 1)
        part = self.emit("SLICE", (a.id,), w - n, n)
        return Wire(self.emit("SEXT", (part,), w), ty)

    # -- expressions -----------------------------------------------------------
    def expr(self, e: A.Expr):
        return getattr(self, "_" + type(e).__name__)(e)

    def eval_as(self, e: A.Expr, ty: Layout):
        if isinstance(e, A.InitList):
            value = _zero(ty)
            if isinstance(ty, Array):
                for i, item in enumerate(e.items):
                    value[i] = self.eval_as(item, ty.elem)
            else:
                for (name, sub), item in zip(ty.fields, e.items):
                    value[name] = self.eval_as(item, sub)
            return value
        v = self.expr(e)
        if isinstance(ty, Scalar):
            return self.conv(v, ty)
        return v

    def _IntLit(self, e):
        return Const(e.value, UNTYPED)

    def _BoolLit(self, e):
        return Const(int(e.value), BOOL)

    def _Name(self, e):
        decl = e.decl
        env = self.frame.env
        if decl in env:
            return env[decl]
        if isinstance(decl, A.VarDecl) and decl.is_const:
            return Const(decl.const_value, decl.layout)
        raise AssertionError(f"unbound name {e.ident}")

    def _Index(self, e):
        base = self.expr(e.base)
        idx = self.expr(e.index)
        if isinstance(idx, Const):
            i = idx.value
            if not 0 <= i < len(base):
                self.fail(e.span, D.INDEX_OUT_OF_BOUNDS,
                          f"index {S.natural(i, idx.type)} out of bounds for array of length {len(base)}")
            return base[i]
        return self.mux_tree(idx, base, e.type)

    def mux_tree(self, idx: Wire, items: list, elem: Layout):
        n, w = len(items), idx.type.width
        k = max(1, (n - 1).bit_length())
        bits = min(k, w)
        level = list(items[: 1 << bits]) + [_zero(elem)] * max(0, (1 << bits) - n)
        for j in range(bits):
            sel = Wire(self.emit("SLICE", (idx.id,), 1, j), BOOL) if w > 1 else Wire(idx.id, BOOL)
            level = [self.select(sel, level[2 * i + 1], level[2 * i]) for i in range(len(level) // 2)]
        result = level[0]
        if w > k:
            limit = self.b.literal(n, w)
            inside = Wire(self.emit("ULT", (idx.id, limit), 1), BOOL)
            result = self.select(inside, result, _zero(elem))
        return result

    def _Field(self, e):
        return self.expr(e.base)[e.name]

    def _Unary(self, e):
        v = self.expr(e.operand)
        if e.op == "!":
            if isinstance(v, Const):
                return Const(int(v.value == 0), BOOL)
            if v.type.width == 1:
                return Wire(self.emit("NOT", (v.id,), 1), BOOL)
            zero = self.b.literal(0, v.type.width)
            return Wire(self.emit("EQ", (v.id, zero), 1), BOOL)
        v = self.conv(v, e.type)
        if isinstance(v, Const):
            return Const(S.unary(e.op, v.value, e.type), e.type)
        kind = "NEG" if e.op == "-" else "NOT"
        return Wire(self.emit(kind, (v.id,), e.type.width), e.type)

    def _Binary(self, e):
        if e.op in ("&&", "||"):
            a = self.conv(self.expr(e.left), BOOL)
            b = self.conv(self.expr(e.right), BOOL)
            return self.binop("&" if e.op == "&&" else "|", a, b, BOOL)
        if e.op in ("<<", ">>"):
            a = self.conv(self.expr(e.left), e.type)
            return self.shift(e.op, a, self.expr(e.right), e.type)
        a = self.conv(self.expr(e.left), e.operand_type)
        b = self.conv(self.expr(e.right), e.operand_type)
        return self.binop(e.op, a, b, e.operand_type)

    def _Ternary(self, e):
        c = self.conv(self.expr(e.cond), BOOL)
        then = self.eval_as(e.then, e.type)
        else_ = self.eval_as(e.else_, e.type)
        return self.select(c, then, else_)

    def _Cast(self, e):
        return self.conv(self.expr(e.operand), e.type)

    def _Call(self, e):
        fn = e.target
        args = [self.eval_as(a, p.layout) for a, p in zip(e.args, fn.params)]
        return self.inline(fn, args)

    # -- statements ------------------------------------------------------------
    def inline(self, fn: A.Function, args: list):
        saved = self.frame
        self.frame = _Frame({p: v for p, v in zip(fn.params, args)})
        try:
            self.block(fn.body.stmts)
            result = _zero(fn.ret)
            for pred, value in reversed(self.frame.returns):
                result = value if pred is None else self.select(pred, value, result)
            return result
        finally:
            self.frame = saved

    def block(self, stmts):
        for s in stmts:
            if self.frame.done:
                return
            self.stmt(s)

    def stmt(self, s: A.Stmt):
        fr = self.frame
        if isinstance(s, A.VarDecl):
            if s.is_const and s.const_value is not None:
                fr.env[s] = Const(s.const_value, s.layout)
            elif s.init is not None:
                fr.env[s] = self.eval_as(s.init, s.layout)
            else:
                fr.env[s] = _zero(s.layout)
        elif isinstance(s, A.Assign):
            ty = s.target.type
            if s.op == "=":
                value = self.eval_as(s.value, ty)
            else:
                op = s.op[:-1]
                old = self.expr(s.target)
                if op in ("<<", ">>"):
                    value = self.shift(op, old, self.expr(s.value), ty)
                else:
                    a = self.conv(old, s.operand_type)
                    b = self.conv(self.expr(s.value), s.operand_type)
                    value = self.conv(self.binop(op, a, b, s.operand_type), ty)
            self.store(s.target, value)
        elif isinstance(s, A.IncDec):
            ty = s.target.type
            old = self.expr(s.target)
            self.store(s.target, self.binop("+" if s.op == "++" else "-", old, Const(1, ty), ty))
        elif isinstance(s, A.ExprStmt):
            pass  # expressions have no side effects
        elif isinstance(s, A.Block):
            self.block(s.stmts)
        elif isinstance(s, A.If):
            self.if_stmt(s)
        elif isinstance(s, A.For):
            self.for_stmt(s)
        elif isinstance(s, A.Return):
            value = self.eval_as(s.value, s.ret_layout)
            fr.returns.append((self.path_condition(), value))
            if not fr.pred:
                fr.done = True
        else:
            self.fail(s.span, D.UNSUPPORTED_CONTROL, f"cannot lower {type(s).__name__}")

    def if_stmt(self, s: A.If):
        fr = self.frame
        c = self.conv(self.expr(s.cond), BOOL)
        if isinstance(c, Const):
            if c.value:
                self.block(s.then.stmts)
            elif s.else_ is not None:
                self.block(s.else_.stmts)
            return
        outer_env, outer_pred = fr.env, fr.pred

        fr.env, fr.pred, fr.done = dict(outer_env), outer_pred + ((c, True),), False
        self.block(s.then.stmts)
        then_env, then_done = fr.env, fr.done

        fr.env, fr.done = dict(outer_env), False
        fr.pred = outer_pred + ((c, False),)
        if s.else_ is not None:
            self.block(s.else_.stmts)
        else_env, else_done = fr.env, fr.done

        fr.pred = outer_pred
        fr.done = then_done and else_done
        if then_done:
            fr.env = {k: else_env[k] for k in outer_env}
        elif else_done:
            fr.env = {k: then_env[k] for k in outer_env}
        else:
            fr.env = {k: self.select(c, then_env[k], else_env[k]) for k in outer_env}

    def for_stmt(self, s: A.For):
        fr = self.frame
        if s.init is not None:
            self.stmt(s.init)
        trips = 0
        while not fr.done:
            c = self.conv(self.expr(s.cond), BOOL)
            if not isinstance(c, Const):
                self.fail(s.cond.span, D.VARIABLE_LOOP_BOUND, "loop bound must be compile-time constant")
            if not c.value:
                break
            trips += 1
            if trips > MAX_TRIP_COUNT:
                self.fail(s.span, D.UNBOUNDED_LOOP, f"loop does not terminate within {MAX_TRIP_COUNT} iterations")
            self.block(s.body.stmts)
            if s.step is not None and not fr.done:
                self.stmt(s.step)

    def store(self, target: A.Expr, value):
        env = self.frame.env
        if isinstance(target, A.Name):
            env[target.decl] = value
            return
        base = self.expr(target.base)
        if isinstance(target, A.Field):
            new = dict(base)
            new[target.name] = value
        else:
            idx = self.expr(target.index)
            new = list(base)
            if isinstance(idx, Const):
                i = idx.value
                if not 0 <= i < len(base):
                    self.fail(target.span, D.INDEX_OUT_OF_BOUNDS,
                              f"index {S.natural(i, idx.type)} out of bounds for array of length {len(base)}")
                new[i] = value
            else:
                w = idx.type.width
                for k in range(min(len(base), 1 << w)):
                    hit = Wire(self.emit("EQ", (idx.id, self.b.literal(k, w)), 1), BOOL)
                    new[k] = self.select(hit, value, base[k])
        self.store(target.base, new)

    # -- entry point -----------------------------------------------------------
    def input_value(self, layout: Layout, path: str):
        if isinstance(layout, Scalar):
            return Wire(self.b.add_input(path, layout), layout)
        if isinstance(layout, Array):
            return [self.input_value(layout.elem, f"{path}[{i}]") for i in range(layout.length)]
        return {name: self.input_value(sub, f"{path}.{name}") for name, sub in layout.fields}

    def add_outputs(self, value, layout: Layout, path: str):
        if isinstance(layout, Scalar):
            self.b.add_output(path, self.node(value), layout)
        elif isinstance(layout, Array):
            for i, v in enumerate(value):
                self.add_outputs(v, layout.elem, f"{path}[{i}]")
        else:
            for name, sub in layout.fields:
                self.add_outputs(value[name], sub, f"{path}.{name}")

    def lower(self, fn: A.Function) -> ir.IRFunction:
        args = [self.input_value(p.layout, p.name) for p in fn.params]
        result = self.inline(fn, args)
        self.add_outputs(result, fn.ret, "out")
        return self.b.build()


_CMP = {"==", "!=", "<", "<=", ">", ">="}
_ARITH = {"+": "ADD", "-": "SUB", "*": "MUL", "/": "UDIV", "%": "UMOD", "&": "AND", "|": "OR", "^": "XOR"}


def lower_to_ir(program: A.Program, entry: str, node_limit: int | None = DEFAULT_NODE_LIMIT) -> ir.IRFunction:
    """Lower function ``entry`` of a checked program; raises CompileError."""
    fn = program.functions.get(entry)
    if fn is None:
        known = ", ".join(sorted(program.functions)) or "none"
        raise D.CompileError([D.error(D.Span(1, 1), D.UNKNOWN_ENTRY,
                                      f"entry function {entry!r} not found (defined: {known})")])
    lowerer = Lowerer(program, entry, node_limit)
    try:
        return lowerer.lower(fn)
    except _Abort as exc:
        diag = exc.diag
        if diag.span is None:
            diag = D.Diagnostic(diag.severity, fn.span, diag.code, diag.message)
        raise D.CompileError([diag]) from None
    except ir.IRError as exc:
        raise D.CompileError([D.error(fn.span, D.CIRCUIT_TOO_LARGE, str(exc))]) from None
