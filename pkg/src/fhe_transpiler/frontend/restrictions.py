"""Data-independence restrictions.

Every loop must have a trip count known at compile time, no function may reach
itself through calls, and control flow is limited to structured ``if``/``for``.
Pointer syntax and variable-length arrays never make it past the parser and
resolver, which report them with their own restriction codes.
"""

from __future__ import annotations

from typing import Iterator

from . import ast as A
from . import diagnostics as D
from .interp import Evaluator, Interpreter, MAX_TRIP_COUNT, NotStatic, truthy


def _children(e: A.Expr) -> list[A.Expr]:
    if isinstance(e, A.Index):
        return [e.base, e.index]
    if isinstance(e, A.Field):
        return [e.base]
    if isinstance(e, A.Unary):
        return [e.operand]
    if isinstance(e, A.Binary):
        return [e.left, e.right]
    if isinstance(e, A.Ternary):
        return [e.cond, e.then, e.else_]
    if isinstance(e, (A.Call,)):
        return list(e.args)
    if isinstance(e, A.Cast):
        return [e.operand]
    if isinstance(e, A.InitList):
        return list(e.items)
    return []


def walk_expr(e: A.Expr | None) -> Iterator[A.Expr]:
    if e is None:
        return
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(_children(x))


def stmt_exprs(s: A.Stmt) -> list[A.Expr]:
    if isinstance(s, A.VarDecl):
        return [s.init] if s.init is not None else []
    if isinstance(s, A.Assign):
        return [s.target, s.value]
    if isinstance(s, A.IncDec):
        return [s.target]
    if isinstance(s, A.ExprStmt):
        return [s.expr]
    if isinstance(s, (A.If, A.While)):
        return [s.cond]
    if isinstance(s, A.For):
        return [s.cond] if s.cond is not None else []
    if isinstance(s, A.Return):
        return [s.value] if s.value is not None else []
    return []


def sub_stmts(s: A.Stmt) -> list[A.Stmt]:
    if isinstance(s, A.Block):
        return list(s.stmts)
    if isinstance(s, A.If):
        return [s.then] + ([s.else_] if s.else_ is not None else [])
    if isinstance(s, A.For):
        return [x for x in (s.init, s.step) if x is not None] + [s.body]
    if isinstance(s, A.While):
        return [s.body]
    return []


def walk_stmts(s: A.Stmt) -> Iterator[A.Stmt]:
    yield s
    for sub in sub_stmts(s):
        yield from walk_stmts(sub)


def root_decl(target: A.Expr):
    while isinstance(target, (A.Index, A.Field)):
        target = target.base
    return target.decl if isinstance(target, A.Name) else None


def is_static(e: A.Expr, counters) -> bool:
    """True if ``e`` only uses literals, named constants and loop counters."""
    for x in walk_expr(e):
        if isinstance(x, A.Name):
            decl = x.decl
            if decl in counters:
                continue
            if isinstance(decl, A.VarDecl) and decl.is_const and decl.const_value is not None:
                continue
            return False
        if isinstance(x, (A.Index, A.Field, A.Call, A.InitList)):
            return False
    return True


def call_graph(program: A.Program) -> dict[str, list[A.Call]]:
    graph: dict[str, list[A.Call]] = {}
    for name, fn in program.functions.items():
        calls = []
        for s in walk_stmts(fn.body):
            for e in stmt_exprs(s):
                calls.extend(x for x in walk_expr(e) if isinstance(x, A.Call) and x.target is not None)
        graph[name] = calls
    return graph


def _reaches(graph, start: str, goal: str) -> bool:
    seen, stack = set(), [start]
    while stack:
        f = stack.pop()
        if f == goal:
            return True
        if f in seen:
            continue
        seen.add(f)
        stack.extend(c.func for c in graph.get(f, ()))
    return False


class _Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.diags: list[D.Diagnostic] = []

    def err(self, span, code, message):
        self.diags.append(D.error(span, code, message))

    def block(self, stmts, counters: frozenset):
        for s in stmts:
            self.stmt(s, counters)

    def mark_indices(self, s: A.Stmt, counters):
        for e in stmt_exprs(s):
            for x in walk_expr(e):
                if isinstance(x, A.Index):
                    x.dynamic = not is_static(x.index, counters)

    def stmt(self, s: A.Stmt, counters: frozenset):
        self.mark_indices(s, counters)
        if isinstance(s, (A.Assign, A.IncDec)):
            if root_decl(s.target) in counters:
                self.err(s.span, D.LOOP_COUNTER_MODIFIED, "loop counter must not be modified inside the loop body")
        elif isinstance(s, A.Block):
            self.block(s.stmts, counters)
        elif isinstance(s, A.If):
            self.block(s.then.stmts, counters)
            if s.else_ is not None:
                self.block(s.else_.stmts, counters)
        elif isinstance(s, A.For):
            self.for_loop(s, counters)
        elif isinstance(s, A.While):
            kind = "do-while" if s.do_while else "while"
            self.err(s.span, D.UNBOUNDED_LOOP,
                     f"{kind} loops have no compile-time trip count; use a for loop with constant bounds")
            self.block(s.body.stmts, counters)
        elif isinstance(s, A.Jump):
            self.err(s.span, D.UNSUPPORTED_CONTROL, f"'{s.kind}' is unsupported (every iteration must run in full)")

    def for_loop(self, s: A.For, outer: frozenset):
        own: list = []
        ok = True
        init = s.init
        if init is not None:
            if isinstance(init, A.VarDecl) and init.init is not None:
                own.append(init)
                value = init.init
            elif isinstance(init, A.Assign) and init.op == "=" and isinstance(init.target, A.Name):
                own.append(init.target.decl)
                value = init.value
            else:
                self.err(init.span, D.VARIABLE_LOOP_BOUND,
                         "loop initializer must set the counter to a compile-time constant")
                ok, value = False, None
            if value is not None and not is_static(value, outer):
                self.err(value.span, D.VARIABLE_LOOP_BOUND, "loop counter start must be compile-time constant")
                ok = False
        s.counters = own
        counters = outer | frozenset(own)
        if s.cond is None:
            self.err(s.span, D.UNBOUNDED_LOOP, "for loop without a condition never terminates")
            ok = False
        elif not is_static(s.cond, counters):
            self.err(s.cond.span, D.VARIABLE_LOOP_BOUND, "loop bound must be compile-time constant")
            ok = False
        step = s.step
        if step is not None:
            if isinstance(step, (A.Assign, A.IncDec)) and root_decl(step.target) in own \
                    and isinstance(step.target, A.Name):
                if isinstance(step, A.Assign) and not is_static(step.value, counters):
                    self.err(step.span, D.VARIABLE_LOOP_BOUND, "loop step must be compile-time constant")
                    ok = False
            else:
                self.err(step.span, D.VARIABLE_LOOP_BOUND, "loop step must update the loop counter")
                ok = False
        self.block(s.body.stmts, counters)
        if ok and all(is_static_without(e, outer) for e in self._loop_exprs(s)):
            self.check_termination(s)

    @staticmethod
    def _loop_exprs(s: A.For) -> list[A.Expr]:
        out = [s.cond]
        for x in (s.init, s.step):
            if x is not None:
                out.extend(stmt_exprs(x)[-1:])
        return out

    def check_termination(self, s: A.For):
        frame: dict = {}

        def lookup(name: A.Name):
            if name.decl in frame:
                return frame[name.decl]
            if isinstance(name.decl, A.VarDecl) and name.decl.const_value is not None:
                return name.decl.const_value
            raise NotStatic(name)

        ev = Evaluator(lookup)
        interp = Interpreter(self.program)
        try:
            if s.init is not None:
                interp.exec_stmt(s.init, frame, ev)
            trips = 0
            while truthy(ev.eval(s.cond), s.cond.type):
                trips += 1
                if trips > MAX_TRIP_COUNT:
                    self.err(s.span, D.UNBOUNDED_LOOP,
                             f"loop does not terminate within {MAX_TRIP_COUNT} iterations")
                    return
                if s.step is not None:
                    interp.exec_stmt(s.step, frame, ev)
                elif trips > 1:
                    self.err(s.span, D.UNBOUNDED_LOOP, "loop counter never changes, so the loop never terminates")
                    return
        except NotStatic:
            pass


def is_static_without(e: A.Expr, outer) -> bool:
    """Static using only literals, constants and the loop's own counters."""
    return not any(isinstance(x, A.Name) and x.decl in outer for x in walk_expr(e))


def check_restrictions(program: A.Program) -> list[D.Diagnostic]:
    """All restriction errors in a resolved program (empty if none)."""
    checker = _Checker(program)
    graph = call_graph(program)
    for name, fn in program.functions.items():
        checker.block(fn.body.stmts, frozenset())
        for call in graph[name]:
            if _reaches(graph, call.func, name):
                if call.func == name:
                    msg = f"recursion unsupported: {name!r} calls itself"
                else:
                    msg = f"recursion unsupported: {name!r} calls {call.func!r}, which calls back into {name!r}"
                checker.err(call.span, D.RECURSION, msg)
    return sorted(checker.diags, key=lambda d: (d.span.line, d.span.col))


def _always_returns(stmts: list[A.Stmt]) -> bool:
    for s in stmts:
        if isinstance(s, A.Return):
            return True
        if isinstance(s, A.Block) and _always_returns(s.stmts):
            return True
        if isinstance(s, A.If) and s.else_ is not None \
                and _always_returns(s.then.stmts) and _always_returns(s.else_.stmts):
            return True
    return False


def lint(program: A.Program) -> list[D.Diagnostic]:
    """Warnings: dynamic array indices and functions that may fall off the end.

    Must run after :func:`check_restrictions`, which classifies indices.
    """
    out: list[D.Diagnostic] = []
    for fn in program.functions.values():
        for s in walk_stmts(fn.body):
            for e in stmt_exprs(s):
                for x in walk_expr(e):
                    if isinstance(x, A.Index) and x.dynamic:
                        n = x.base.type.length if x.base.type is not None else "?"
                        out.append(D.warning(x.span, D.DYNAMIC_INDEX,
                                             f"index is not a compile-time constant; lowered to a MUX tree over {n} elements"))
        if not _always_returns(fn.body.stmts):
            out.append(D.warning(fn.span, D.MISSING_RETURN,
                                 f"{fn.name!r} may reach the end without returning; the result is then zero"))
    return sorted(out, key=lambda d: (d.span.line, d.span.col))
