"""IR-to-IR optimization passes and the pass pipeline driver.

Three multi-bit passes are provided: ``fold`` (constant folding plus local
algebraic identities), ``dce`` (dead node elimination) and ``narrow``
(known-bits / demanded-bits width narrowing). A fourth name, ``gates``,
enables the gate-level clean-up that runs after booleanification; it is
accepted by :class:`PassPipeline` but ignored by :func:`run`, which only
touches the multi-bit IR.

Every pass returns a renumbered function, so equal results compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .ir import IRBuilder, IRFunction, IRNode, Port, eval_node, mask, renumber

IR_PASSES = ("fold", "dce", "narrow")
GATE_PASSES = ("gates",)
DEFAULT_PASSES = ("fold", "dce", "narrow", "dce")


# --- constant folding ---------------------------------------------------------

class _Rebuilder:
    """Re-emits nodes in order, mapping old ids to new ones."""

    def __init__(self, f: IRFunction):
        self.f = f
        self.b = IRBuilder(f.name)
        self.alias: dict[int, int] = {}
        self.defs: dict[int, IRNode] = {}
        self.lits: dict[int, int] = {}
        for p in f.inputs:
            self.alias[p.id] = self.b.add_input(p.name, p.type)

    def width(self, i: int) -> int:
        return self.b.width(i)

    def literal(self, value: int, width: int) -> int:
        i = self.b.literal(value, width)
        self.lits[i] = value & mask(width)
        self.defs.setdefault(i, IRNode(i, "LITERAL", (), width, value & mask(width)))
        return i

    def emit(self, kind: str, ops, width: int, attr=None) -> int:
        if kind == "LITERAL":
            return self.literal(attr, width)
        i = self.b.emit(kind, ops, width, attr)
        self.defs[i] = IRNode(i, kind, tuple(ops), width, attr)
        return i

    def finish(self) -> IRFunction:
        for p in self.f.outputs:
            self.b.add_output(p.name, self.alias[p.id], p.type)
        return self.b.build()


def _simplify(r: _Rebuilder, n: IRNode, ops: tuple[int, ...]):
    """Return an existing id that equals ``n``, or ``None`` to emit it."""
    w, k = n.width, n.kind
    lits = r.lits
    vals = [lits.get(o) for o in ops]
    if ops and all(v is not None for v in vals):
        value = eval_node(k, n.attr, w, vals, [r.width(o) for o in ops])
        return r.literal(value, w)
    m = mask(w)
    a = ops[0] if ops else None
    b = ops[1] if len(ops) > 1 else None
    va = vals[0] if vals else None
    vb = vals[1] if len(vals) > 1 else None
    zero = lambda: r.literal(0, w)  # noqa: E731

    if k == "ADD":
        if vb == 0:
            return a
        if va == 0:
            return b
    elif k == "SUB":
        if vb == 0:
            return a
        if a == b:
            return zero()
    elif k == "MUL":
        if va == 0 or vb == 0:
            return zero()
        if vb == 1:
            return a
        if va == 1:
            return b
    elif k in ("UDIV", "SDIV"):
        if vb == 1:
            return a
    elif k in ("UMOD", "SMOD"):
        if vb == 1:
            return zero()
    elif k == "AND":
        if va == 0 or vb == 0:
            return zero()
        if vb == m or a == b:
            return a
        if va == m:
            return b
    elif k == "OR":
        if va == m or vb == m:
            return r.literal(m, w)
        if vb == 0 or a == b:
            return a
        if va == 0:
            return b
    elif k == "XOR":
        if a == b:
            return zero()
        if vb == 0:
            return a
        if va == 0:
            return b
    elif k in ("NOT", "NEG"):
        d = r.defs.get(a)
        if d is not None and d.kind == k:
            return d.operands[0]
    elif k in ("SHL_CONST", "SHR_CONST"):
        if n.attr == 0:
            return a
        if n.attr >= w:
            return zero()
    elif k in ("EQ", "ULE", "SLE"):
        if a == b:
            return r.literal(1, 1)
    elif k in ("NE", "ULT", "SLT"):
        if a == b:
            return r.literal(0, 1)
    elif k == "SELECT":
        c, t, e = ops
        if vals[0] is not None:
            return t if vals[0] else e
        if t == e:
            return t
        if w == 1 and vals[1] == 1 and vals[2] == 0:
            return c
        if w == 1 and vals[1] == 0 and vals[2] == 1:
            return r.emit("NOT", (c,), 1)
    elif k == "SLICE":
        start = n.attr
        if start == 0 and r.width(a) == w:
            return a
        d = r.defs.get(a)
        if d is not None and d.kind == "SLICE":
            return r.emit("SLICE", d.operands, w, d.attr + start)
        if d is not None and d.kind in ("ZEXT", "SEXT"):
            src = d.operands[0]
            sw = r.width(src)
            if start + w <= sw:
                return src if (start == 0 and w == sw) else r.emit("SLICE", (src,), w, start)
            if d.kind == "ZEXT" and start >= sw:
                return zero()
            if d.kind == "ZEXT" and start == 0:
                return r.emit("ZEXT", (src,), w)
        if d is not None and d.kind == "CONCAT":
            lo, hi = d.operands
            lw = r.width(lo)
            if start + w <= lw:
                return r.emit("SLICE", (lo,), w, start) if (start or w != lw) else lo
            if start >= lw:
                return r.emit("SLICE", (hi,), w, start - lw) if (start != lw or w != r.width(hi)) else hi
    elif k in ("ZEXT", "SEXT"):
        if r.width(a) == w:
            return a
        d = r.defs.get(a)
        if d is not None and (d.kind == k or (k == "SEXT" and d.kind == "ZEXT")):
            return r.emit(d.kind, d.operands, w)
    return None


def constant_fold(f: IRFunction) -> IRFunction:
    """Evaluate all-literal nodes and apply local algebraic identities."""
    r = _Rebuilder(f)
    for n in f.nodes:
        ops = tuple(r.alias[o] for o in n.operands)
        if n.kind == "LITERAL":
            r.alias[n.id] = r.literal(n.attr, n.width)
            continue
        same = _simplify(r, n, ops)
        r.alias[n.id] = same if same is not None else r.emit(n.kind, ops, n.width, n.attr)
    return r.finish()


# --- dead node elimination ----------------------------------------------------

def live_ids(f: IRFunction) -> set[int]:
    """Ids reachable backwards from the outputs."""
    defs = {n.id: n for n in f.nodes}
    live: set[int] = set()
    stack = [p.id for p in f.outputs]
    while stack:
        i = stack.pop()
        if i in live:
            continue
        live.add(i)
        if i in defs:
            stack.extend(defs[i].operands)
    return live


def dead_node_elimination(f: IRFunction) -> IRFunction:
    live = live_ids(f)
    kept = tuple(n for n in f.nodes if n.id in live)
    return renumber(IRFunction(f.name, f.inputs, f.outputs, kept))


# --- width narrowing ----------------------------------------------------------

def known_bits(f: IRFunction) -> dict[int, tuple[int, int]]:
    """Forward analysis: id -> (known-zero mask, known-one mask)."""
    kb: dict[int, tuple[int, int]] = {p.id: (0, 0) for p in f.inputs}
    widths = f.widths()
    for n in f.nodes:
        w, m = n.width, mask(n.width)
        ops = [kb[o] for o in n.operands]
        ow = [widths[o] for o in n.operands]
        k = n.kind
        kz = ko = 0
        if k == "LITERAL":
            ko, kz = n.attr, m & ~n.attr
        elif k == "AND":
            ko, kz = ops[0][1] & ops[1][1], ops[0][0] | ops[1][0]
        elif k == "OR":
            ko, kz = ops[0][1] | ops[1][1], ops[0][0] & ops[1][0]
        elif k == "XOR":
            known = (ops[0][0] | ops[0][1]) & (ops[1][0] | ops[1][1])
            ko = known & (ops[0][1] ^ ops[1][1])
            kz = known & ~ko
        elif k == "NOT":
            kz, ko = ops[0][1], ops[0][0]
        elif k in ("ADD", "MUL", "UDIV", "UMOD"):
            hi = [m & ~z for z, _ in ops]  # largest possible values
            if k == "ADD":
                bound = hi[0] + hi[1]
            elif k == "MUL":
                bound = hi[0] * hi[1]
            elif k == "UDIV":
                bound = hi[0] if ops[1][1] else m
            else:
                bound = hi[0]
            if bound <= m:
                kz = m & ~mask(bound.bit_length())
            if k == "MUL":
                tz = sum(_trailing(z) for z, _ in ops)
                kz |= mask(min(tz, w))
        elif k == "SHL_CONST":
            a = n.attr
            kz = ((ops[0][0] << a) | mask(a)) & m
            ko = (ops[0][1] << a) & m
        elif k == "SHR_CONST":
            a = n.attr
            kz = (ops[0][0] >> a) | (m & ~mask(max(w - a, 0)))
            ko = ops[0][1] >> a
        elif k == "SELECT":
            c = ops[0]
            if c[1] & 1:
                kz, ko = ops[1]
            elif c[0] & 1:
                kz, ko = ops[2]
            else:
                kz, ko = ops[1][0] & ops[2][0], ops[1][1] & ops[2][1]
        elif k == "CONCAT":
            kz = ops[0][0] | (ops[1][0] << ow[0])
            ko = ops[0][1] | (ops[1][1] << ow[0])
        elif k == "SLICE":
            kz, ko = (ops[0][0] >> n.attr) & m, (ops[0][1] >> n.attr) & m
        elif k == "ZEXT":
            kz = ops[0][0] | (m & ~mask(ow[0]))
            ko = ops[0][1]
        elif k == "SEXT":
            sw = ow[0]
            ext = m & ~mask(sw)
            kz = ops[0][0] | (ext if ops[0][0] >> (sw - 1) & 1 else 0)
            ko = ops[0][1] | (ext if ops[0][1] >> (sw - 1) & 1 else 0)
        kb[n.id] = (kz & m, ko & m)
    return kb


def _trailing(known_zero: int) -> int:
    """Number of consecutive known-zero bits starting at bit 0."""
    return ((known_zero + 1) & ~known_zero).bit_length() - 1


def _low(d: int) -> int:
    return mask(d.bit_length())


def demanded_bits(f: IRFunction) -> dict[int, int]:
    """Backward analysis: id -> mask of bits some output can observe."""
    widths = f.widths()
    dem: dict[int, int] = {i: 0 for i in widths}
    for p in f.outputs:
        dem[p.id] |= mask(p.width)
    for n in reversed(f.nodes):
        d = dem[n.id]
        if not d or n.kind == "LITERAL":
            continue
        k, ops = n.kind, n.operands
        ow = [widths[o] for o in ops]
        if k in ("AND", "OR", "XOR", "NOT"):
            demand = [d] * len(ops)
        elif k in ("ADD", "SUB", "MUL", "NEG"):
            demand = [_low(d)] * len(ops)
        elif k == "SHL_CONST":
            demand = [d >> n.attr]
        elif k == "SHR_CONST":
            demand = [(d << n.attr) & mask(ow[0])]
        elif k == "SLICE":
            demand = [d << n.attr]
        elif k == "ZEXT":
            demand = [d & mask(ow[0])]
        elif k == "SEXT":
            sw = ow[0]
            demand = [(d & mask(sw)) | ((1 << (sw - 1)) if d >> (sw - 1) else 0)]
        elif k == "CONCAT":
            demand = [d & mask(ow[0]), d >> ow[0]]
        elif k == "SELECT":
            demand = [1, d, d]
        else:
            demand = [mask(x) for x in ow]
        for o, x in zip(ops, demand):
            dem[o] |= x
    return dem


NARROWABLE = {"ADD", "SUB", "MUL", "NEG", "AND", "OR", "XOR", "NOT", "SHL_CONST", "SELECT"}


def width_narrowing(f: IRFunction) -> IRFunction:
    """Replace fully known nodes by literals and shrink over-wide arithmetic.

    A node whose demanded bits and possibly-nonzero bits both fit in the low
    ``k`` bits is recomputed at width ``k`` on sliced operands and
    zero-extended back, which is exact on every bit a consumer can see.
    """
    kb = known_bits(f)
    dem = demanded_bits(f)
    r = _Rebuilder(f)
    for n in f.nodes:
        ops = tuple(r.alias[o] for o in n.operands)
        w, m = n.width, mask(n.width)
        kz, ko = kb[n.id]
        if n.kind == "LITERAL" or (kz | ko) == m:
            r.alias[n.id] = r.literal(ko if n.kind != "LITERAL" else n.attr, w)
            continue
        k = min(dem[n.id].bit_length(), (m & ~kz).bit_length())
        k = max(k, 1)
        if n.kind in NARROWABLE and k < w and not (n.kind == "SHL_CONST" and n.attr >= k):
            data = ops[1:] if n.kind == "SELECT" else ops
            sliced = [_narrow_operand(r, o, k) for o in data]
            if n.kind == "SELECT":
                sliced = [ops[0]] + sliced
            small = r.emit(n.kind, sliced, k, n.attr)
            r.alias[n.id] = r.emit("ZEXT", (small,), w)
            continue
        r.alias[n.id] = r.emit(n.kind, ops, w, n.attr)
    return r.finish()


def _narrow_operand(r: _Rebuilder, o: int, k: int) -> int:
    if o in r.lits:
        return r.literal(r.lits[o], k)
    return r.emit("SLICE", (o,), k, 0)


# --- pipeline -----------------------------------------------------------------

PASSES: dict[str, Callable[[IRFunction], IRFunction]] = {
    "fold": constant_fold,
    "dce": dead_node_elimination,
    "narrow": width_narrowing,
}


@dataclass(frozen=True)
class PassPipeline:
    passes: tuple[str, ...] = DEFAULT_PASSES
    enabled: tuple[bool, ...] | None = None
    max_iterations: int = 10

    def __post_init__(self):
        object.__setattr__(self, "passes", tuple(self.passes))
        for name in self.passes:
            if name not in PASSES and name not in GATE_PASSES:
                raise ValueError(f"unknown pass {name!r} (known: {', '.join(IR_PASSES + GATE_PASSES)})")
        if self.enabled is None:
            object.__setattr__(self, "enabled", (True,) * len(self.passes))
        else:
            object.__setattr__(self, "enabled", tuple(bool(x) for x in self.enabled))
            if len(self.enabled) != len(self.passes):
                raise ValueError("one enable flag per pass is required")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @classmethod
    def parse(cls, text: str, max_iterations: int = 10) -> "PassPipeline":
        """From a comma-separated list such as ``fold,dce,narrow``; '' means none."""
        names = tuple(x.strip() for x in text.split(",") if x.strip())
        return cls(names, max_iterations=max_iterations)

    def active(self) -> list[str]:
        return [p for p, on in zip(self.passes, self.enabled) if on]

    def ir_passes(self) -> list[str]:
        return [p for p in self.active() if p in PASSES]

    def gate_level(self) -> bool:
        return "gates" in self.active()


@dataclass
class PassReport:
    entries: list[tuple[int, str, int, int]] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    initial_nodes: int = 0
    final_nodes: int = 0

    def record(self, iteration: int, name: str, before: int, after: int):
        self.entries.append((iteration, name, before, after))

    def table(self) -> str:
        lines = [f"{'iter':>4}  {'pass':<8} {'before':>7} {'after':>7} {'delta':>7}"]
        for it, name, before, after in self.entries:
            lines.append(f"{it:>4}  {name:<8} {before:>7} {after:>7} {after - before:>+7}")
        lines.append(f"nodes {self.initial_nodes} -> {self.final_nodes} in {self.iterations} iteration(s)"
                     + ("" if self.converged else " (iteration cap reached before fixpoint)"))
        return "\n".join(lines)

    def kv(self) -> str:
        lines = [f"ir.nodes.initial={self.initial_nodes}", f"ir.nodes.final={self.final_nodes}",
                 f"ir.iterations={self.iterations}", f"ir.converged={str(self.converged).lower()}"]
        for it, name, before, after in self.entries:
            lines.append(f"pass.{it}.{name}.before={before}")
            lines.append(f"pass.{it}.{name}.after={after}")
        return "\n".join(lines)


def run(f: IRFunction, p: PassPipeline | None = None) -> tuple[IRFunction, PassReport]:
    """Apply the pipeline's IR passes repeatedly until nothing changes."""
    p = p or PassPipeline()
    report = PassReport(initial_nodes=f.node_count(), final_nodes=f.node_count())
    names = p.ir_passes()
    if not names:
        return f, report
    cur = f
    report.converged = False
    for it in range(1, p.max_iterations + 1):
        start = cur
        for name in names:
            before = cur.node_count()
            cur = PASSES[name](cur)
            report.record(it, name, before, cur.node_count())
        report.iterations = it
        if cur == start:
            report.converged = True
            break
    report.final_nodes = cur.node_count()
    return cur, report


def optimize_to_gates(f: IRFunction, p: PassPipeline | None = None):
    """IR passes, booleanification, then gate-level passes if ``gates`` is on."""
    from . import booleanifier

    p = p or PassPipeline()
    g, report = run(f, p)
    circuit = booleanifier.booleanify(g)
    if p.gate_level():
        circuit = booleanifier.gate_optimize(circuit)
    return g, circuit, report
