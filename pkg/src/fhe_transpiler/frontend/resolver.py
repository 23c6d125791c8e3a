"""Name and type resolution. Annotates the tree in place."""

from __future__ import annotations

from ..codec import Array, BOOL, Layout, Scalar, Struct, scalar
from . import ast as A
from . import diagnostics as D
from . import semantics as S
from .ast import UNTYPED
from .interp import NotStatic, static_value
from .parser import SCALAR_ALIASES

ARITH = {"+", "-", "*", "/", "%"}
BITWISE = {"&", "|", "^"}
COMPARE = {"==", "!=", "<", "<=", ">", ">="}


def is_scalar(t) -> bool:
    return t is UNTYPED or isinstance(t, Scalar)


class Resolver:
    def __init__(self, program: A.Program):
        self.p = program
        self.diags: list[D.Diagnostic] = []
        self.scopes: list[dict[str, object]] = [{}]
        self.fn: A.Function | None = None

    def err(self, span, code, message):
        self.diags.append(D.error(span, code, message))

    # -- driver ------------------------------------------------------------
    def run(self) -> list[D.Diagnostic]:
        for kind, item in self.p.order:
            if kind == "struct":
                self.declare_struct(item)
            elif kind == "const":
                self.declare_var(item, global_scope=True)
                if item.name not in self.p.consts:
                    self.p.consts[item.name] = item
            else:
                if item.name in self.p.functions:
                    self.err(item.span, D.DUPLICATE_SYMBOL, f"function {item.name!r} already defined")
                    continue
                self.p.functions[item.name] = item
        for fn in self.p.functions.values():
            self.resolve_signature(fn)
        for fn in self.p.functions.values():
            self.resolve_body(fn)
        return self.diags

    def declare_struct(self, s: A.StructDecl):
        if s.name in self.p.structs:
            self.err(s.span, D.DUPLICATE_SYMBOL, f"struct {s.name!r} already defined")
            return
        fields, seen = [], set()
        for name, ref, span in s.fields:
            if name in seen:
                self.err(span, D.DUPLICATE_SYMBOL, f"duplicate field {name!r} in struct {s.name}")
                continue
            seen.add(name)
            layout = self.layout_of(ref)
            if layout is not None:
                fields.append((name, layout))
        self.p.structs[s.name] = s
        if len(fields) == len(s.fields) and fields:
            s.layout = Struct(s.name, tuple(fields))

    def resolve_signature(self, fn: A.Function):
        self.scopes = [self.scopes[0], {}]
        fn.ret = self.layout_of(fn.ret_ref)
        for p in fn.params:
            p.layout = self.layout_of(p.type_ref)
            if p.name in self.scopes[-1]:
                self.err(p.span, D.DUPLICATE_SYMBOL, f"duplicate parameter {p.name!r}")
            self.scopes[-1][p.name] = p

    def resolve_body(self, fn: A.Function):
        self.fn = fn
        self.scopes = [self.scopes[0], {p.name: p for p in fn.params}]
        for stmt in fn.body.stmts:
            self.stmt(stmt)
        self.fn = None

    # -- types ---------------------------------------------------------------
    def layout_of(self, ref: A.TypeRef) -> Layout | None:
        layout: Layout | None
        if ref.struct_keyword or ref.name in self.p.structs:
            decl = self.p.structs.get(ref.name)
            if decl is None:
                self.err(ref.span, D.UNKNOWN_TYPE, f"unknown struct {ref.name!r}")
                return None
            layout = decl.layout
            if layout is None:
                return None
        else:
            name = SCALAR_ALIASES.get(ref.name, ref.name)
            try:
                layout = scalar(name)
            except ValueError:
                if name[:1] in "ui" and name[1:].isdigit():
                    self.err(ref.span, D.UNKNOWN_TYPE, f"unknown type {ref.name!r}: integer widths must be 1..64")
                else:
                    self.err(ref.span, D.UNKNOWN_TYPE, f"unknown type {ref.name!r}")
                return None
        for dim in reversed(ref.dims):
            t = self.expr(dim)
            if t is None:
                return None
            if not is_scalar(t):
                self.err(dim.span, D.TYPE_MISMATCH, "array length must be an integer")
                return None
            try:
                n = S.natural(static_value(dim), t)
            except NotStatic:
                self.err(dim.span, D.VARIABLE_LENGTH_ARRAY,
                         "array length must be a compile-time constant (variable-length arrays are unsupported)")
                return None
            except S.ConstantError as exc:
                self.err(dim.span, D.NOT_CONSTANT, str(exc))
                return None
            if n < 1:
                self.err(dim.span, D.TYPE_MISMATCH, f"array length must be positive, got {n}")
                return None
            layout = Array(layout, int(n))
        return layout

    # -- declarations / statements -------------------------------------------
    def lookup(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare_var(self, d: A.VarDecl, global_scope: bool = False):
        scope = self.scopes[0] if global_scope else self.scopes[-1]
        d.layout = self.layout_of(d.type_ref)
        if d.init is not None:
            self.check_assignable(d.init, d.layout)
        if d.is_const:
            if not isinstance(d.layout, Scalar):
                if d.layout is not None:
                    self.err(d.span, D.TYPE_MISMATCH, "const declarations must be scalar")
            elif d.init is None:
                self.err(d.span, D.NOT_CONSTANT, f"const {d.name!r} needs an initializer")
            elif d.init.type is not None:
                try:
                    d.const_value = S.convert(static_value(d.init), d.init.type, d.layout)
                except NotStatic:
                    self.err(d.init.span, D.NOT_CONSTANT, f"initializer of const {d.name!r} is not a compile-time constant")
                except S.ConstantError as exc:
                    self.err(d.init.span, D.NOT_CONSTANT, str(exc))
        if d.name in scope:
            self.err(d.span, D.DUPLICATE_SYMBOL, f"{d.name!r} already declared in this scope")
        scope[d.name] = d

    def block(self, b: A.Block):
        self.scopes.append({})
        for s in b.stmts:
            self.stmt(s)
        self.scopes.pop()

    def stmt(self, s: A.Stmt):
        if isinstance(s, A.VarDecl):
            self.declare_var(s)
        elif isinstance(s, A.Assign):
            t = self.lvalue(s.target)
            if t is None:
                self.expr(s.value) if not isinstance(s.value, A.InitList) else None
                return
            if s.op == "=":
                self.check_assignable(s.value, t)
                return
            op = s.op[:-1]
            vt = self.expr(s.value)
            if vt is None:
                return
            if not (isinstance(t, Scalar) and is_scalar(vt)):
                self.err(s.span, D.TYPE_MISMATCH, f"operator {s.op} needs scalar operands")
                return
            if op not in ("<<", ">>"):
                s.operand_type = S.unify(t, vt, "bitwise" if op in BITWISE else "arith")
                self.check_literal(s.value, s.operand_type)
        elif isinstance(s, A.IncDec):
            t = self.lvalue(s.target)
            if t is not None and not isinstance(t, Scalar):
                self.err(s.span, D.TYPE_MISMATCH, f"{s.op} needs a scalar operand")
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.If):
            self.condition(s.cond)
            self.block(s.then)
            if s.else_ is not None:
                self.block(s.else_)
        elif isinstance(s, A.For):
            self.scopes.append({})
            if s.init is not None:
                self.stmt(s.init)
            if s.cond is not None:
                self.condition(s.cond)
            if s.step is not None:
                self.stmt(s.step)
            self.block(s.body)
            self.scopes.pop()
        elif isinstance(s, A.While):
            self.condition(s.cond)
            self.block(s.body)
        elif isinstance(s, A.Return):
            s.ret_layout = self.fn.ret
            if s.value is None:
                self.err(s.span, D.TYPE_MISMATCH, "return needs a value")
            else:
                self.check_assignable(s.value, self.fn.ret)
        elif isinstance(s, A.Jump):
            pass

    def condition(self, e: A.Expr):
        t = self.expr(e)
        if t is not None and not is_scalar(t):
            self.err(e.span, D.TYPE_MISMATCH, "condition must be a scalar")

    def lvalue(self, e: A.Expr):
        root = e
        while isinstance(root, (A.Index, A.Field)):
            root = root.base
        t = self.expr(e)
        if isinstance(root, A.Name) and isinstance(root.decl, A.VarDecl) and root.decl.is_const:
            self.err(e.span, D.TYPE_MISMATCH, f"cannot assign to const {root.ident!r}")
        return t

    def check_literal(self, e: A.Expr, ty) -> None:
        if e.type is UNTYPED and isinstance(ty, Scalar):
            try:
                v = static_value(e)
            except S.ConstantError as exc:
                self.err(e.span, D.NOT_CONSTANT, str(exc))
                return
            if not S.literal_fits(v, ty):
                self.err(e.span, D.TYPE_MISMATCH, f"literal {v} out of range for {ty}")

    def check_assignable(self, e: A.Expr, dst: Layout | None):
        if isinstance(e, A.InitList):
            self.init_list(e, dst)
            return
        src = self.expr(e)
        if src is None or dst is None:
            return
        if isinstance(dst, Scalar):
            if not is_scalar(src):
                self.err(e.span, D.TYPE_MISMATCH, f"cannot convert {src} to {dst}")
            else:
                self.check_literal(e, dst)
        elif src != dst:
            self.err(e.span, D.TYPE_MISMATCH, f"cannot convert {src} to {dst}")

    def init_list(self, e: A.InitList, layout: Layout | None):
        e.type = layout
        if layout is None:
            return
        if isinstance(layout, Scalar):
            self.err(e.span, D.TYPE_MISMATCH, f"initializer list for scalar type {layout}")
            return
        subs = [layout.elem] * layout.length if isinstance(layout, Array) else [t for _, t in layout.fields]
        if len(e.items) > len(subs):
            self.err(e.span, D.TYPE_MISMATCH, f"too many initializers for {layout}")
            return
        for item, sub in zip(e.items, subs):
            self.check_assignable(item, sub)

    # -- expressions -----------------------------------------------------------
    def expr(self, e: A.Expr):
        e.type = getattr(self, "_" + type(e).__name__)(e)
        return e.type

    def _IntLit(self, e):
        return UNTYPED

    def _BoolLit(self, e):
        return BOOL

    def _Name(self, e):
        decl = self.lookup(e.ident)
        if decl is None:
            self.err(e.span, D.UNKNOWN_SYMBOL, f"unknown variable {e.ident!r}")
            return None
        e.decl = decl
        return decl.layout

    def _Index(self, e):
        bt = self.expr(e.base)
        it = self.expr(e.index)
        if bt is None or it is None:
            return None
        if not isinstance(bt, Array):
            self.err(e.span, D.TYPE_MISMATCH, f"cannot index a value of type {bt}")
            return None
        if not is_scalar(it):
            self.err(e.index.span, D.TYPE_MISMATCH, "array index must be an integer")
            return None
        return bt.elem

    def _Field(self, e):
        bt = self.expr(e.base)
        if bt is None:
            return None
        if not isinstance(bt, Struct):
            self.err(e.span, D.TYPE_MISMATCH, f"type {bt} has no fields")
            return None
        try:
            return bt.field(e.name)
        except KeyError:
            self.err(e.span, D.UNKNOWN_SYMBOL, f"struct {bt.name} has no field {e.name!r}")
            return None

    def _Unary(self, e):
        t = self.expr(e.operand)
        if t is None:
            return None
        if not is_scalar(t):
            self.err(e.span, D.TYPE_MISMATCH, f"operator {e.op} needs a scalar operand")
            return None
        if e.op == "!":
            return BOOL
        if e.op == "-" and t is not UNTYPED and t.boolean:
            return Scalar(1)
        return t

    def _Binary(self, e):
        lt, rt = self.expr(e.left), self.expr(e.right)
        if lt is None or rt is None:
            return None
        if not (is_scalar(lt) and is_scalar(rt)):
            self.err(e.span, D.TYPE_MISMATCH, f"operator {e.op} needs scalar operands")
            return None
        if e.op in ("&&", "||"):
            e.operand_type = BOOL
            return BOOL
        if e.op in ("<<", ">>"):
            if lt is UNTYPED and rt is UNTYPED:
                return UNTYPED
            if lt is UNTYPED:
                ty = Scalar(1) if rt.boolean else rt
                self.check_literal(e.left, ty)
                return ty
            return lt
        cls = "bitwise" if e.op in BITWISE else "arith"
        e.operand_type = S.unify(lt, rt, cls)
        if e.operand_type is not UNTYPED:
            self.check_literal(e.left, e.operand_type)
            self.check_literal(e.right, e.operand_type)
        if e.op in COMPARE:
            return BOOL
        return e.operand_type

    def _Ternary(self, e):
        self.condition(e.cond)
        a, b = self.expr(e.then), self.expr(e.else_)
        if a is None or b is None:
            return None
        if is_scalar(a) and is_scalar(b):
            t = S.unify(a, b, "bitwise")
            if t is UNTYPED:
                if e.cond.type is UNTYPED:
                    return UNTYPED
                t = Scalar(32, signed=True)  # both arms are bare literals: C's int
            self.check_literal(e.then, t)
            self.check_literal(e.else_, t)
            return t
        if a != b:
            self.err(e.span, D.TYPE_MISMATCH, f"conditional arms have different types {a} and {b}")
            return None
        return a

    def _Call(self, e):
        fn = self.p.functions.get(e.func)
        arg_types = [self.expr(a) for a in e.args]
        if fn is None:
            self.err(e.span, D.UNKNOWN_SYMBOL, f"unknown function {e.func!r}")
            return None
        e.target = fn
        if len(e.args) != len(fn.params):
            self.err(e.span, D.TYPE_MISMATCH,
                     f"{e.func} expects {len(fn.params)} arguments, got {len(e.args)}")
            return None
        for a, t, p in zip(e.args, arg_types, fn.params):
            if t is None or p.layout is None:
                continue
            if isinstance(p.layout, Scalar):
                if not is_scalar(t):
                    self.err(a.span, D.TYPE_MISMATCH, f"cannot pass {t} as {p.layout}")
                else:
                    self.check_literal(a, p.layout)
            elif t != p.layout:
                self.err(a.span, D.TYPE_MISMATCH, f"cannot pass {t} as {p.layout}")
        return fn.ret

    def _Cast(self, e):
        target = self.layout_of(e.target_ref)
        t = self.expr(e.operand)
        if target is None or t is None:
            return None
        if not (isinstance(target, Scalar) and is_scalar(t)):
            self.err(e.span, D.TYPE_MISMATCH, "casts convert between scalar types only")
            return None
        self.check_literal(e.operand, target) if not target.boolean else None
        return target

    def _InitList(self, e):
        self.err(e.span, D.TYPE_MISMATCH, "initializer list is only allowed in declarations and assignments")
        return None


def resolve(program: A.Program) -> list[D.Diagnostic]:
    """Fill the symbol tables of ``program`` and type-annotate every node."""
    return Resolver(program).run()
