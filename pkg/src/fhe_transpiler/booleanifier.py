"""Flattening of multi-bit IR into single-bit gate circuits.

Wires are numbered with the circuit's input bits first (group by group,
least-significant bit first) followed by one wire per gate. Output groups may
name any wire, including input wires.

``.gates`` text format::

    circuit sum
    inputs a:8 b:8
    outputs out:8
    signed a            # optional: groups holding two's complement values
    w16 = CONST0()
    w17 = XOR(w0, w8)
    w18 = MUX(w1, w2, w3)  # selector, then, else
    output out = w17, w18, ...

Input wires are implicit: ``w0`` .. ``w15`` above, in header order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .codec import bits_to_int, int_to_bits
from .ir import IRFunction, IRNode, validate

GATE_ARITY = {"AND": 2, "OR": 2, "XOR": 2, "NOT": 1, "MUX": 3, "COPY": 1, "CONST0": 0, "CONST1": 0}
LOGIC_KINDS = ("AND", "OR", "XOR", "NOT", "MUX")


@dataclass(frozen=True)
class Gate:
    id: int
    kind: str
    operands: tuple[int, ...] = ()


@dataclass(frozen=True)
class WireGroup:
    name: str
    wires: tuple[int, ...]
    signed: bool = False

    @property
    def width(self) -> int:
        return len(self.wires)


@dataclass(frozen=True)
class GateCircuit:
    name: str
    inputs: tuple[WireGroup, ...]
    outputs: tuple[WireGroup, ...]
    gates: tuple[Gate, ...]

    @property
    def num_input_wires(self) -> int:
        return sum(g.width for g in self.inputs)

    @property
    def num_wires(self) -> int:
        return self.num_input_wires + len(self.gates)

    def gate_count(self) -> int:
        return len(self.gates)

    def logic_gate_count(self) -> int:
        return sum(1 for g in self.gates if g.kind in LOGIC_KINDS)

    def counts_by_kind(self) -> dict[str, int]:
        counts = {k: 0 for k in GATE_ARITY}
        for g in self.gates:
            counts[g.kind] += 1
        return counts

    def levels(self) -> dict[int, int]:
        """Wire id -> level; inputs are level 0, a gate is 1 + max operand level."""
        level = {w: 0 for grp in self.inputs for w in grp.wires}
        for g in self.gates:
            level[g.id] = 1 + max((level[o] for o in g.operands), default=0)
        return level

    def depth(self) -> int:
        lv = self.levels()
        return max((lv[g.id] for g in self.gates), default=0)

    def input_group(self, name: str) -> WireGroup:
        for g in self.inputs:
            if g.name == name:
                return g
        raise KeyError(name)


class CircuitError(ValueError):
    pass


def check_circuit(c: GateCircuit) -> list[str]:
    """Structural problems of ``c`` (empty when well formed)."""
    problems = []
    defined = set()
    expected = 0
    for grp in c.inputs:
        for w in grp.wires:
            if w != expected:
                problems.append(f"input wire w{w} of {grp.name} out of order")
            defined.add(w)
            expected += 1
    for g in c.gates:
        if g.kind not in GATE_ARITY:
            problems.append(f"unknown gate kind {g.kind!r} at w{g.id}")
        elif len(g.operands) != GATE_ARITY[g.kind]:
            problems.append(f"{g.kind} expects {GATE_ARITY[g.kind]} operands at w{g.id}")
        if g.id != expected:
            problems.append(f"gate w{g.id} out of order (expected w{expected})")
        for o in g.operands:
            if o not in defined:
                problems.append(f"w{g.id} uses undefined wire w{o}")
        defined.add(g.id)
        expected += 1
    for grp in c.outputs:
        for w in grp.wires:
            if w not in defined:
                problems.append(f"output {grp.name} references undefined wire w{w}")
    return problems


# --- IR -> gates ----------------------------------------------------------------

class _Emitter:
    def __init__(self, first_id: int):
        self.gates: list[Gate] = []
        self.next = first_id
        self._c0: int | None = None
        self._c1: int | None = None

    def gate(self, kind: str, *ops: int) -> int:
        g = Gate(self.next, kind, tuple(ops))
        self.gates.append(g)
        self.next += 1
        return g.id

    def const(self, bit: int) -> int:
        if bit:
            if self._c1 is None:
                self._c1 = self.gate("CONST1")
            return self._c1
        if self._c0 is None:
            self._c0 = self.gate("CONST0")
        return self._c0

    # arithmetic building blocks -------------------------------------------
    def ripple_add(self, a: Sequence[int], b: Sequence[int], carry: int) -> tuple[list[int], int]:
        """Ripple-carry full adder, five gates per bit.

        For each bit: t = a^b, s = t^c, c1 = c&t, c2 = a&b, c = c2|c1.
        Returns the sum bits and the final carry-out wire.
        """
        out = []
        for ai, bi in zip(a, b):
            t = self.gate("XOR", ai, bi)
            out.append(self.gate("XOR", t, carry))
            c1 = self.gate("AND", carry, t)
            c2 = self.gate("AND", ai, bi)
            carry = self.gate("OR", c2, c1)
        return out, carry

    def carry_out(self, a: Sequence[int], b: Sequence[int], carry: int) -> int:
        """Carry chain of the ripple adder without the sum bits."""
        for ai, bi in zip(a, b):
            t = self.gate("XOR", ai, bi)
            c1 = self.gate("AND", carry, t)
            c2 = self.gate("AND", ai, bi)
            carry = self.gate("OR", c2, c1)
        return carry

    def sub(self, a, b) -> tuple[list[int], int]:
        """a - b as a + ~b + 1; the carry-out is 1 iff a >= b (unsigned)."""
        nb = [self.gate("NOT", x) for x in b]
        return self.ripple_add(a, nb, self.const(1))

    def geq(self, a, b) -> int:
        nb = [self.gate("NOT", x) for x in b]
        return self.carry_out(a, nb, self.const(1))

    def neg(self, a) -> list[int]:
        na = [self.gate("NOT", x) for x in a]
        carry = self.const(1)
        out = []
        for i, x in enumerate(na):
            out.append(self.gate("XOR", x, carry))
            if i + 1 < len(na):
                carry = self.gate("AND", x, carry)
        return out

    def mul(self, a, b) -> list[int]:
        n = len(a)
        acc = [self.gate("AND", a[j], b[0]) for j in range(n)]
        for i in range(1, n):
            pp = [self.gate("AND", a[j], b[i]) for j in range(n - i)]
            high, _ = self.ripple_add(acc[i:], pp, self.const(0))
            acc = acc[:i] + high
        return acc

    def udivmod(self, a, b) -> tuple[list[int], list[int]]:
        """Restoring division; b == 0 yields all-ones quotient, remainder a."""
        n = len(a)
        rem = [self.const(0)] * n
        q = [0] * n
        bext = list(b) + [self.const(0)]
        for i in range(n - 1, -1, -1):
            trial = [a[i]] + rem  # (rem << 1) | a_i, n+1 bits
            diff, ge = self.sub(trial, bext)
            q[i] = ge
            rem = [self.gate("MUX", ge, d, t) for d, t in zip(diff[:n], trial[:n])]
        return q, rem

    def or_tree(self, bits) -> int:
        bits = list(bits)
        while len(bits) > 1:
            nxt = [self.gate("OR", bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                nxt.append(bits[-1])
            bits = nxt
        return bits[0]

    def mux(self, s, t, e) -> list[int]:
        return [self.gate("MUX", s, x, y) for x, y in zip(t, e)]

    def sdivmod(self, a, b) -> tuple[list[int], list[int]]:
        sa, sb = a[-1], b[-1]
        abs_a = self.mux(sa, self.neg(a), a)
        abs_b = self.mux(sb, self.neg(b), b)
        uq, ur = self.udivmod(abs_a, abs_b)
        q = self.mux(self.gate("XOR", sa, sb), self.neg(uq), uq)
        b_zero = self.gate("NOT", self.or_tree(b))
        ones = [self.const(1)] * len(a)
        q = self.mux(b_zero, ones, q)
        r = self.mux(sa, self.neg(ur), ur)
        return q, r


def _lower_node(em: _Emitter, n: IRNode, args: list[list[int]], arg_widths: list[int]) -> list[int]:
    k, w = n.kind, n.width
    if k == "LITERAL":
        return [em.const(b) for b in int_to_bits(n.attr, w)]
    if k == "ADD":
        return em.ripple_add(args[0], args[1], em.const(0))[0]
    if k == "SUB":
        return em.sub(args[0], args[1])[0]
    if k == "MUL":
        return em.mul(args[0], args[1])
    if k in ("UDIV", "UMOD"):
        q, r = em.udivmod(args[0], args[1])
        return q if k == "UDIV" else r
    if k in ("SDIV", "SMOD"):
        q, r = em.sdivmod(args[0], args[1])
        return q if k == "SDIV" else r
    if k in ("AND", "OR", "XOR"):
        return [em.gate(k, x, y) for x, y in zip(args[0], args[1])]
    if k == "NOT":
        return [em.gate("NOT", x) for x in args[0]]
    if k == "NEG":
        return em.neg(args[0])
    if k == "SHL_CONST":
        s = min(n.attr, w)
        return [em.const(0)] * s + list(args[0][: w - s])
    if k == "SHR_CONST":
        s = min(n.attr, w)
        return list(args[0][s:]) + [em.const(0)] * s
    if k == "EQ":
        return [em.gate("NOT", em.or_tree(em.gate("XOR", x, y) for x, y in zip(args[0], args[1])))]
    if k == "NE":
        return [em.or_tree(em.gate("XOR", x, y) for x, y in zip(args[0], args[1]))]
    if k in ("ULT", "ULE", "SLT", "SLE"):
        a, b = list(args[0]), list(args[1])
        if k[0] == "S":
            a[-1] = em.gate("NOT", a[-1])
            b[-1] = em.gate("NOT", b[-1])
        if k.endswith("LT"):
            return [em.gate("NOT", em.geq(a, b))]
        return [em.geq(b, a)]
    if k == "SELECT":
        return em.mux(args[0][0], args[1], args[2])
    if k == "CONCAT":
        return list(args[0]) + list(args[1])
    if k == "SLICE":
        return list(args[0][n.attr: n.attr + w])
    if k == "ZEXT":
        return list(args[0]) + [em.const(0)] * (w - arg_widths[0])
    if k == "SEXT":
        return list(args[0]) + [args[0][-1]] * (w - arg_widths[0])
    raise CircuitError(f"cannot booleanify {k}")


def booleanify(f: IRFunction) -> GateCircuit:
    """Flatten ``f`` into single-bit gates (no simplification is attempted)."""
    problems = validate(f)
    if problems:
        raise CircuitError("; ".join(problems))
    bits: dict[int, list[int]] = {}
    inputs = []
    wire = 0
    for p in f.inputs:
        ws = tuple(range(wire, wire + p.width))
        wire += p.width
        bits[p.id] = list(ws)
        inputs.append(WireGroup(p.name, ws, p.type.signed))
    em = _Emitter(wire)
    widths = f.widths()
    for n in f.nodes:
        bits[n.id] = _lower_node(em, n, [bits[o] for o in n.operands], [widths[o] for o in n.operands])
    outputs = tuple(WireGroup(p.name, tuple(bits[p.id]), p.type.signed) for p in f.outputs)
    return GateCircuit(f.name, tuple(inputs), outputs, tuple(em.gates))


# --- gate-level optimization ----------------------------------------------------

def gate_optimize(c: GateCircuit) -> GateCircuit:
    """Constant propagation, double-NOT removal, copy propagation, dead gates.

    Each original gate turns into at most one gate, so the count never grows.
    Outputs that end up naming an input wire get a COPY, mirroring the gate
    they replace.
    """
    n_in = c.num_input_wires
    # value of each wire: ("c", bit) for a constant or ("w", id) for a wire of
    # the new circuit; new gates keep their operands as such values too
    val: dict[int, tuple[str, int]] = {w: ("w", w) for w in range(n_in)}
    new: list[tuple[str, tuple]] = []
    nid = n_in

    def defn(x):
        return new[x[1] - n_in] if x[0] == "w" and x[1] >= n_in else None

    def emit(kind, *ops):
        nonlocal nid
        new.append((kind, ops))
        nid += 1
        return ("w", nid - 1)

    def negate(x):
        if x[0] == "c":
            return ("c", 1 - x[1])
        d = defn(x)
        if d is not None and d[0] == "NOT":
            return d[1][0]
        return emit("NOT", x)

    def complementary(x, y) -> bool:
        dx, dy = defn(x), defn(y)
        return (dx is not None and dx[0] == "NOT" and dx[1][0] == y) or \
               (dy is not None and dy[0] == "NOT" and dy[1][0] == x)

    for g in c.gates:
        ops = [val[o] for o in g.operands]
        k = g.kind
        if k in ("CONST0", "CONST1"):
            res = ("c", int(k == "CONST1"))
        elif k == "COPY":
            res = ops[0]
        elif k == "NOT":
            res = negate(ops[0])
        elif k in ("AND", "OR", "XOR"):
            x, y = ops
            if y[0] == "c":
                x, y = y, x
            if x[0] == "c":
                if k == "AND":
                    res = y if x[1] else ("c", 0)
                elif k == "OR":
                    res = ("c", 1) if x[1] else y
                else:
                    res = negate(y) if x[1] else y
            elif x == y:
                res = ("c", 0) if k == "XOR" else x
            elif complementary(x, y):
                res = ("c", 0 if k == "AND" else 1)
            else:
                res = emit(k, x, y)
        elif k == "MUX":
            s, t, e = ops
            if s[0] == "c":
                res = t if s[1] else e
            elif t == e:
                res = t
            elif t == ("c", 1) and e == ("c", 0):
                res = s
            elif t == ("c", 0) and e == ("c", 1):
                res = negate(s)
            elif e == ("c", 0):
                res = emit("AND", s, t)
            elif t == ("c", 1):
                res = emit("OR", s, e)
            else:
                res = emit("MUX", s, t, e)
        else:
            raise CircuitError(f"unknown gate kind {k}")
        val[g.id] = res

    # outputs: resolve, adding a COPY where a gate output collapsed to an input
    copies: dict[tuple, tuple] = {}
    out_vals = []
    for grp in c.outputs:
        vs = []
        for w in grp.wires:
            v = val[w]
            if v[0] == "w" and v[1] < n_in and w >= n_in:
                if v not in copies:
                    copies[v] = emit("COPY", v)
                v = copies[v]
            vs.append(v)
        out_vals.append(vs)

    live: set[int] = set()
    need_const: set[int] = set()
    stack = [v for vs in out_vals for v in vs]
    while stack:
        v = stack.pop()
        if v[0] == "c":
            need_const.add(v[1])
            continue
        w = v[1]
        if w in live or w < n_in:
            continue
        live.add(w)
        stack.extend(new[w - n_in][1])

    # renumber: shared constants first, then live gates in order
    gates: list[Gate] = []
    remap: dict[int, int] = {}
    const_wire: dict[int, int] = {}
    nxt = n_in
    for bit in sorted(need_const):
        const_wire[bit] = nxt
        gates.append(Gate(nxt, "CONST1" if bit else "CONST0"))
        nxt += 1

    def ref(v) -> int:
        return const_wire[v[1]] if v[0] == "c" else remap.get(v[1], v[1])

    for w in range(n_in, nid):
        if w not in live:
            continue
        kind, ops = new[w - n_in]
        remap[w] = nxt
        gates.append(Gate(nxt, kind, tuple(ref(o) for o in ops)))
        nxt += 1

    outputs = tuple(
        WireGroup(grp.name, tuple(ref(v) for v in vs), grp.signed)
        for grp, vs in zip(c.outputs, out_vals))
    return GateCircuit(c.name, c.inputs, outputs, tuple(gates))


# --- evaluation -------------------------------------------------------------------

def evaluate_gates(c: GateCircuit, input_bits) -> np.ndarray:
    """Plaintext evaluation of ``c``.

    ``input_bits`` has one row per input wire, either a flat sequence of 0/1 or
    a 2-D array of shape ``(num_input_wires, batch)``. Returns the output bits
    (all output groups concatenated) with the same trailing shape.
    """
    bits = np.asarray(input_bits, dtype=bool)
    n_in = c.num_input_wires
    if bits.shape[:1] != (n_in,):
        raise CircuitError(f"expected {n_in} input bits, got {bits.shape[0] if bits.ndim else 0}")
    batch = bits.shape[1:]
    vals = np.empty((c.num_wires,) + batch, dtype=bool)
    vals[:n_in] = bits
    for g in c.gates:
        o = g.operands
        k = g.kind
        if k == "AND":
            vals[g.id] = vals[o[0]] & vals[o[1]]
        elif k == "XOR":
            vals[g.id] = vals[o[0]] ^ vals[o[1]]
        elif k == "OR":
            vals[g.id] = vals[o[0]] | vals[o[1]]
        elif k == "NOT":
            vals[g.id] = ~vals[o[0]]
        elif k == "MUX":
            vals[g.id] = np.where(vals[o[0]], vals[o[1]], vals[o[2]])
        elif k == "COPY":
            vals[g.id] = vals[o[0]]
        elif k == "CONST0":
            vals[g.id] = False
        elif k == "CONST1":
            vals[g.id] = True
        else:
            raise CircuitError(f"unknown gate kind {k}")
    out = [w for grp in c.outputs for w in grp.wires]
    return vals[out].astype(np.uint8)


def pack_inputs(c: GateCircuit, values: Mapping[str, int | Iterable[int]]) -> np.ndarray:
    """Bits for named input groups; values may be ints or equal-length int arrays."""
    rows = []
    for grp in c.inputs:
        if grp.name not in values:
            raise CircuitError(f"missing input {grp.name}")
        v = np.asarray(values[grp.name], dtype=object)
        for i in range(grp.width):
            rows.append(((v >> i) & 1).astype(np.uint8) if v.ndim else int((int(v) >> i) & 1))
    extra = set(values) - {g.name for g in c.inputs}
    if extra:
        raise CircuitError(f"unknown inputs: {sorted(extra)}")
    return np.array(rows, dtype=np.uint8)


def unpack_outputs(c: GateCircuit, bits: np.ndarray, signed: bool = False) -> dict[str, object]:
    """Output group name -> unsigned value (or array of values for a batch)."""
    out = {}
    row = 0
    for grp in c.outputs:
        chunk = bits[row: row + grp.width]
        row += grp.width
        if chunk.ndim == 1:
            out[grp.name] = bits_to_int([int(b) for b in chunk], signed and grp.signed)
        else:
            weights = np.array([1 << i for i in range(grp.width)], dtype=object)
            vals = (chunk.astype(object) * weights[:, None]).sum(axis=0) if grp.width else np.zeros(chunk.shape[1], dtype=object)
            out[grp.name] = vals
    return out


def evaluate_words(c: GateCircuit, values: Mapping[str, int]) -> dict[str, int]:
    """Convenience: named unsigned input values -> named unsigned outputs."""
    return unpack_outputs(c, evaluate_gates(c, pack_inputs(c, values)))


# --- text format ------------------------------------------------------------------

def serialize_gates(c: GateCircuit) -> str:
    lines = [f"circuit {c.name}",
             "inputs" + "".join(f" {g.name}:{g.width}" for g in c.inputs),
             "outputs" + "".join(f" {g.name}:{g.width}" for g in c.outputs)]
    signed_in = [g.name for g in c.inputs if g.signed]
    signed_out = [g.name for g in c.outputs if g.signed]
    if signed_in:
        lines.append("signed inputs " + " ".join(signed_in))
    if signed_out:
        lines.append("signed outputs " + " ".join(signed_out))
    for g in c.gates:
        lines.append(f"w{g.id} = {g.kind}({', '.join(f'w{o}' for o in g.operands)})")
    for grp in c.outputs:
        lines.append(f"output {grp.name} = " + ", ".join(f"w{w}" for w in grp.wires))
    return "\n".join(lines) + "\n"


_GATE_RE = re.compile(r"w(\d+)\s*=\s*([A-Z0-9]+)\((.*)\)\s*$")


class GatesParseError(CircuitError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _groups(text: str, line: int) -> list[tuple[str, int]]:
    out = []
    for item in text.split():
        name, sep, width = item.rpartition(":")
        if not sep or not width.isdigit():
            raise GatesParseError(line, f"bad group {item!r}, expected name:width")
        out.append((name, int(width)))
    return out


def _wire(tok: str, line: int) -> int:
    tok = tok.strip()
    if not (tok.startswith("w") and tok[1:].isdigit()):
        raise GatesParseError(line, f"bad wire reference {tok!r}")
    return int(tok[1:])


def parse_gates(text: str) -> GateCircuit:
    name = None
    in_spec: list[tuple[str, int]] | None = None
    out_spec: list[tuple[str, int]] | None = None
    signed_in: set[str] = set()
    signed_out: set[str] = set()
    gates: list[Gate] = []
    out_wires: dict[str, tuple[int, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        if word == "circuit":
            name = rest.strip()
        elif word == "inputs":
            in_spec = _groups(rest, lineno)
        elif word == "outputs":
            out_spec = _groups(rest, lineno)
        elif word == "signed":
            which, _, names = rest.partition(" ")
            if which not in ("inputs", "outputs"):
                raise GatesParseError(lineno, "expected 'signed inputs ...' or 'signed outputs ...'")
            (signed_in if which == "inputs" else signed_out).update(names.split())
        elif word == "output":
            oname, eq, wires = rest.partition("=")
            if not eq:
                raise GatesParseError(lineno, "expected 'output <name> = w.., ...'")
            wl = wires.strip()
            out_wires[oname.strip()] = tuple(_wire(t, lineno) for t in wl.split(",")) if wl else ()
        else:
            m = _GATE_RE.match(line)
            if not m:
                raise GatesParseError(lineno, f"malformed line {line!r}")
            kind = m.group(2)
            if kind not in GATE_ARITY:
                raise GatesParseError(lineno, f"unknown gate kind {kind!r}")
            args = m.group(3).strip()
            ops = tuple(_wire(t, lineno) for t in args.split(",")) if args else ()
            if len(ops) != GATE_ARITY[kind]:
                raise GatesParseError(lineno, f"{kind} expects {GATE_ARITY[kind]} operands, got {len(ops)}")
            gates.append(Gate(int(m.group(1)), kind, ops))
    if name is None or in_spec is None or out_spec is None:
        raise GatesParseError(1, "missing circuit/inputs/outputs header")
    inputs = []
    wire = 0
    for gname, width in in_spec:
        inputs.append(WireGroup(gname, tuple(range(wire, wire + width)), gname in signed_in))
        wire += width
    outputs = []
    for gname, width in out_spec:
        if gname not in out_wires:
            raise GatesParseError(1, f"no 'output {gname} = ...' line")
        ws = out_wires[gname]
        if len(ws) != width:
            raise GatesParseError(1, f"output {gname} declares {width} wires but lists {len(ws)}")
        outputs.append(WireGroup(gname, ws, gname in signed_out))
    c = GateCircuit(name, tuple(inputs), tuple(outputs), tuple(gates))
    problems = check_circuit(c)
    if problems:
        raise CircuitError("; ".join(problems))
    return c
