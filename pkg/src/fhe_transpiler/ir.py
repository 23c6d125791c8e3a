"""Multi-bit dataflow IR.

An :class:`IRFunction` is a topologically ordered list of nodes over named,
typed inputs. Input ports occupy their own ids; every node operand must be an
input id or the id of an earlier node. All arithmetic wraps modulo
``2**width`` and is defined for every input (division by zero included), so
the IR describes total functions that can be flattened into gates.

Text format (one item per line, ``#`` starts a comment)::

    fn sum
    in a %0:u8
    in b %1:u8
    %2:8 = ADD(%0, %1)
    %3:4 = SLICE(%2, start=0)
    %4:8 = LITERAL(255)
    %5:8 = SHL_CONST(%2, amount=3)
    out out %2:u8

``CONCAT(lo, hi)`` lists its operands least-significant first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .codec import Scalar, scalar, to_signed

BitWidth = Scalar

ARITY = {
    "LITERAL": 0,
    "ADD": 2, "SUB": 2, "MUL": 2,
    "UDIV": 2, "UMOD": 2, "SDIV": 2, "SMOD": 2,
    "AND": 2, "OR": 2, "XOR": 2, "NOT": 1,
    "SHL_CONST": 1, "SHR_CONST": 1,
    "EQ": 2, "NE": 2, "ULT": 2, "ULE": 2, "SLT": 2, "SLE": 2,
    "NEG": 1, "SELECT": 3, "CONCAT": 2, "SLICE": 1, "ZEXT": 1, "SEXT": 1,
}
KINDS = tuple(ARITY)

# name of the integer attribute carried by a kind, if any
ATTR_NAME = {"LITERAL": "value", "SLICE": "start", "SHL_CONST": "amount", "SHR_CONST": "amount"}

SAME_WIDTH_BINARY = {"ADD", "SUB", "MUL", "UDIV", "UMOD", "SDIV", "SMOD", "AND", "OR", "XOR"}
COMPARISONS = {"EQ", "NE", "ULT", "ULE", "SLT", "SLE"}


@dataclass(frozen=True)
class Port:
    name: str
    id: int
    type: BitWidth

    @property
    def width(self) -> int:
        return self.type.width


@dataclass(frozen=True)
class IRNode:
    id: int
    kind: str
    operands: tuple[int, ...]
    width: int
    attr: int | None = None


@dataclass(frozen=True)
class IRFunction:
    name: str
    inputs: tuple[Port, ...]
    outputs: tuple[Port, ...]
    nodes: tuple[IRNode, ...]

    def widths(self) -> dict[int, int]:
        w = {p.id: p.width for p in self.inputs}
        w.update((n.id, n.width) for n in self.nodes)
        return w

    def node_count(self) -> int:
        return len(self.nodes)

    def non_literal_count(self) -> int:
        return sum(1 for n in self.nodes if n.kind != "LITERAL")

    @property
    def input_width(self) -> int:
        return sum(p.width for p in self.inputs)


class IRError(ValueError):
    pass


class IRParseError(IRError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


def mask(width: int) -> int:
    return (1 << width) - 1


def validate(f: IRFunction) -> list[str]:
    """Return every structural violation found; an empty list means valid."""
    problems: list[str] = []
    widths: dict[int, int] = {}
    for p in f.inputs:
        if p.id in widths:
            problems.append(f"duplicate id %{p.id} for input {p.name}")
        widths[p.id] = p.width
    all_ids = {n.id for n in f.nodes} | set(widths)

    for n in f.nodes:
        where = f"node {n.id}"
        if n.id in widths:
            problems.append(f"duplicate id at {where}")
            continue
        if n.kind not in ARITY:
            problems.append(f"unknown kind {n.kind!r} at {where}")
            widths[n.id] = n.width
            continue
        if n.width < 1:
            problems.append(f"non-positive width at {where}")
        if len(n.operands) != ARITY[n.kind]:
            problems.append(
                f"{n.kind} expects {ARITY[n.kind]} operands, got {len(n.operands)} at {where}")
            widths[n.id] = n.width
            continue
        ok = (n.attr is None) == (n.kind not in ATTR_NAME)
        if not ok:
            problems.append(f"attribute mismatch for {n.kind} at {where}")
        for op in n.operands:
            if op not in widths:
                if op in all_ids:
                    problems.append(f"use before definition of %{op} at {where}")
                else:
                    problems.append(f"dangling operand %{op} at {where}")
                ok = False
        widths[n.id] = n.width
        if ok:
            ow = [widths[o] for o in n.operands]
            problems.extend(_width_problems(n, ow, where))

    for p in f.outputs:
        if p.id not in widths:
            problems.append(f"output {p.name} references missing id %{p.id}")
        elif widths[p.id] != p.width:
            problems.append(f"width mismatch at output {p.name}")
    return problems


def _width_problems(n: IRNode, ow: list[int], where: str) -> Iterable[str]:
    k, w, a = n.kind, n.width, n.attr
    bad = f"width mismatch at {where}"
    if k == "LITERAL":
        if not 0 <= a <= mask(w):
            yield f"literal {a} does not fit width {w} at {where}"
    elif k in SAME_WIDTH_BINARY:
        if ow[0] != w or ow[1] != w:
            yield bad
    elif k in ("NOT", "NEG"):
        if ow[0] != w:
            yield bad
    elif k in ("SHL_CONST", "SHR_CONST"):
        if ow[0] != w:
            yield bad
        if a < 0:
            yield f"negative shift amount at {where}"
    elif k in COMPARISONS:
        if ow[0] != ow[1] or w != 1:
            yield bad
    elif k == "SELECT":
        if ow[0] != 1 or ow[1] != w or ow[2] != w:
            yield bad
    elif k == "CONCAT":
        if ow[0] + ow[1] != w:
            yield bad
    elif k == "SLICE":
        if a < 0 or a + w > ow[0]:
            yield f"slice out of bounds at {where}"
    elif k in ("ZEXT", "SEXT"):
        if w < ow[0]:
            yield bad


def check(f: IRFunction) -> IRFunction:
    problems = validate(f)
    if problems:
        raise IRError("; ".join(problems))
    return f


def _sdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def eval_node(kind: str, attr: int | None, width: int, args: list[int], arg_widths: list[int]) -> int:
    """Value of one node given unsigned operand values; the IR semantics."""
    m = mask(width)
    if kind == "LITERAL":
        return attr
    if kind == "ADD":
        return (args[0] + args[1]) & m
    if kind == "SUB":
        return (args[0] - args[1]) & m
    if kind == "MUL":
        return (args[0] * args[1]) & m
    if kind == "UDIV":
        return m if args[1] == 0 else args[0] // args[1]
    if kind == "UMOD":
        return args[0] if args[1] == 0 else args[0] % args[1]
    if kind in ("SDIV", "SMOD"):
        a, b = to_signed(args[0], width), to_signed(args[1], width)
        if b == 0:
            return m if kind == "SDIV" else args[0]
        q = _sdiv(a, b)
        return (q if kind == "SDIV" else a - q * b) & m
    if kind == "AND":
        return args[0] & args[1]
    if kind == "OR":
        return args[0] | args[1]
    if kind == "XOR":
        return args[0] ^ args[1]
    if kind == "NOT":
        return ~args[0] & m
    if kind == "NEG":
        return -args[0] & m
    if kind == "SHL_CONST":
        return (args[0] << attr) & m
    if kind == "SHR_CONST":
        return args[0] >> attr
    if kind == "EQ":
        return int(args[0] == args[1])
    if kind == "NE":
        return int(args[0] != args[1])
    if kind == "ULT":
        return int(args[0] < args[1])
    if kind == "ULE":
        return int(args[0] <= args[1])
    if kind in ("SLT", "SLE"):
        a, b = to_signed(args[0], arg_widths[0]), to_signed(args[1], arg_widths[1])
        return int(a < b) if kind == "SLT" else int(a <= b)
    if kind == "SELECT":
        return args[1] if args[0] else args[2]
    if kind == "CONCAT":
        return args[0] | (args[1] << arg_widths[0])
    if kind == "SLICE":
        return (args[0] >> attr) & m
    if kind == "ZEXT":
        return args[0]
    if kind == "SEXT":
        return to_signed(args[0], arg_widths[0]) & m
    raise IRError(f"unknown kind {kind!r}")


def _input_value(p: Port, value: int) -> int:
    lo = -(1 << (p.width - 1)) if p.type.signed else 0
    if not lo <= value <= mask(p.width):
        raise IRError(f"value {value} out of range for input {p.name}:{p.type}")
    return value & mask(p.width)


def evaluate(f: IRFunction, inputs: Mapping[str, int]) -> dict[int, int]:
    """Evaluate ``f``; returns output index -> unsigned bit pattern.

    Signed inputs may be given either as negative numbers or as raw bit
    patterns.
    """
    values: dict[int, int] = {}
    for p in f.inputs:
        if p.name not in inputs:
            raise IRError(f"missing input {p.name}")
        values[p.id] = _input_value(p, int(inputs[p.name]))
    extra = set(inputs) - {p.name for p in f.inputs}
    if extra:
        raise IRError(f"unknown inputs: {sorted(extra)}")
    widths = f.widths()
    for n in f.nodes:
        args = [values[o] for o in n.operands]
        values[n.id] = eval_node(n.kind, n.attr, n.width, args, [widths[o] for o in n.operands])
    return {i: values[p.id] for i, p in enumerate(f.outputs)}


def serialize(f: IRFunction) -> str:
    lines = [f"fn {f.name}"]
    for p in f.inputs:
        lines.append(f"in {p.name} %{p.id}:{p.type}")
    for n in f.nodes:
        args = [f"%{o}" for o in n.operands]
        if n.kind == "LITERAL":
            args.append(str(n.attr))
        elif n.attr is not None:
            args.append(f"{ATTR_NAME[n.kind]}={n.attr}")
        lines.append(f"%{n.id}:{n.width} = {n.kind}({', '.join(args)})")
    for p in f.outputs:
        lines.append(f"out {p.name} %{p.id}:{p.type}")
    return "\n".join(lines) + "\n"


_PORT_RE = re.compile(r"(in|out)\s+(\S+)\s+%(\d+):(\S+)\s*$")
_NODE_RE = re.compile(r"%(\d+):(\d+)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\((.*)\)\s*$")


def parse_ir(text: str) -> IRFunction:
    name = None
    inputs: list[Port] = []
    outputs: list[Port] = []
    nodes: list[IRNode] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        col = len(line) - len(stripped) + 1
        if not stripped:
            continue
        if stripped.startswith("fn "):
            if name is not None:
                raise IRParseError(lineno, col, "duplicate fn header")
            name = stripped[3:].strip()
            continue
        if name is None:
            raise IRParseError(lineno, col, "expected 'fn <name>' header")
        if stripped.startswith(("in ", "out ")):
            m = _PORT_RE.match(stripped)
            if not m:
                raise IRParseError(lineno, col, f"malformed port line {stripped!r}")
            try:
                ty = scalar(m.group(4))
            except ValueError as exc:
                raise IRParseError(lineno, col + m.start(4), str(exc)) from None
            port = Port(m.group(2), int(m.group(3)), ty)
            (inputs if m.group(1) == "in" else outputs).append(port)
            continue
        m = _NODE_RE.match(stripped)
        if not m:
            raise IRParseError(lineno, col, f"malformed node line {stripped!r}")
        kind = m.group(3)
        if kind not in ARITY:
            raise IRParseError(lineno, col + m.start(3), f"unknown node kind {kind!r}")
        operands: list[int] = []
        attr = None
        argtext = m.group(4).strip()
        for arg in ([a.strip() for a in argtext.split(",")] if argtext else []):
            if arg.startswith("%") and arg[1:].isdigit():
                operands.append(int(arg[1:]))
            elif kind in ATTR_NAME and attr is None:
                key, _, val = arg.rpartition("=")
                if key and key != ATTR_NAME[kind]:
                    raise IRParseError(lineno, col, f"unexpected attribute {key!r} for {kind}")
                try:
                    attr = int(val, 0)
                except ValueError:
                    raise IRParseError(lineno, col, f"bad integer {val!r}") from None
            else:
                raise IRParseError(lineno, col, f"bad operand {arg!r}")
        nodes.append(IRNode(int(m.group(1)), kind, tuple(operands), int(m.group(2)), attr))
    if name is None:
        raise IRParseError(1, 1, "empty IR text")
    return IRFunction(name, tuple(inputs), tuple(outputs), tuple(nodes))


def renumber(f: IRFunction) -> IRFunction:
    """Canonical ids: inputs 0..n-1 in order, then nodes consecutively."""
    remap = {p.id: i for i, p in enumerate(f.inputs)}
    for n in f.nodes:
        remap[n.id] = len(remap)
    return IRFunction(
        f.name,
        tuple(Port(p.name, remap[p.id], p.type) for p in f.inputs),
        tuple(Port(p.name, remap[p.id], p.type) for p in f.outputs),
        tuple(IRNode(remap[n.id], n.kind, tuple(remap[o] for o in n.operands), n.width, n.attr)
              for n in f.nodes),
    )


@dataclass
class IRBuilder:
    """Incremental construction of an IRFunction with literal sharing."""

    name: str
    inputs: list[Port] = field(default_factory=list)
    outputs: list[Port] = field(default_factory=list)
    nodes: list[IRNode] = field(default_factory=list)
    node_limit: int | None = None
    _widths: dict[int, int] = field(default_factory=dict)
    _literals: dict[tuple[int, int], int] = field(default_factory=dict)

    def _next_id(self) -> int:
        return len(self._widths)

    def add_input(self, name: str, ty: BitWidth) -> int:
        i = self._next_id()
        self.inputs.append(Port(name, i, ty))
        self._widths[i] = ty.width
        return i

    def width(self, node_id: int) -> int:
        return self._widths[node_id]

    def emit(self, kind: str, operands: Iterable[int], width: int, attr: int | None = None) -> int:
        operands = tuple(operands)
        if len(operands) != ARITY[kind]:
            raise IRError(f"{kind} expects {ARITY[kind]} operands")
        if self.node_limit is not None and len(self.nodes) >= self.node_limit:
            raise IRError(f"node limit of {self.node_limit} exceeded (circuit-size blowup)")
        i = self._next_id()
        self.nodes.append(IRNode(i, kind, operands, width, attr))
        self._widths[i] = width
        return i

    def literal(self, value: int, width: int) -> int:
        value &= mask(width)
        key = (value, width)
        if key not in self._literals:
            self._literals[key] = self.emit("LITERAL", (), width, value)
        return self._literals[key]

    def add_output(self, name: str, node_id: int, ty: BitWidth):
        self.outputs.append(Port(name, node_id, ty))

    def build(self) -> IRFunction:
        return IRFunction(self.name, tuple(self.inputs), tuple(self.outputs), tuple(self.nodes))
