"""Command-line driver: ``transpile``, ``run``, ``testbench`` and ``stats``.

Exit codes: 0 success, 1 compile or restriction error, 2 runtime or noise
error, 3 testbench mismatch.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import backend as B
from . import booleanifier as G
from . import codec, ir, runtime
from .frontend import CompileError
from .pipeline import Compiled, compile_source, decode_bits, encode_args

EXIT_OK, EXIT_COMPILE, EXIT_RUNTIME, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --- value literals -----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(-?0[xX][0-9a-fA-F]+|-?\d+)|(true|false)|(\"(?:[^\"\\]|\\.)*\")|([A-Za-z_][\w]*)|(.))")


class _LiteralParser:
    def __init__(self, text: str):
        self.toks: list[tuple[str, str]] = []
        for m in _TOKEN.finditer(text):
            num, boolean, string, ident, other = m.groups()
            if num is not None:
                self.toks.append(("int", num))
            elif boolean is not None:
                self.toks.append(("bool", boolean))
            elif string is not None:
                self.toks.append(("str", string))
            elif ident is not None:
                self.toks.append(("ident", ident))
            elif other is not None and not other.isspace():
                self.toks.append(("op", other))
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "")

    def take(self, text: str | None = None):
        tok = self.peek()
        if text is not None and tok[1] != text:
            raise UsageError(f"expected {text!r}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def value(self) -> Any:
        kind, text = self.peek()
        if kind == "int":
            self.i += 1
            return int(text, 0)
        if kind == "bool":
            self.i += 1
            return text == "true"
        if kind == "str":
            self.i += 1
            return bytes(text[1:-1], "utf-8").decode("unicode_escape")
        if text == "[":
            self.i += 1
            items = []
            while self.peek()[1] != "]":
                items.append(self.value())
                if self.peek()[1] != "]":
                    self.take(",")
            self.take("]")
            return items
        if text == "{":
            self.i += 1
            fields = {}
            while self.peek()[1] != "}":
                k, name = self.take()
                if k != "ident":
                    raise UsageError(f"expected field name, found {name!r}")
                self.take(":")
                fields[name] = self.value()
                if self.peek()[1] != "}":
                    self.take(",")
            self.take("}")
            return fields
        raise UsageError(f"unexpected {text or 'end of input'!r} in value")

    def assignments(self, stop: str | None = None) -> dict[str, Any]:
        out = {}
        while self.peek()[0] != "eof" and self.peek()[1] != stop:
            kind, name = self.take()
            if kind != "ident":
                raise UsageError(f"expected name=value, found {name!r}")
            self.take("=")
            out[name] = self.value()
            if self.peek()[1] == ",":
                self.i += 1
        return out


def parse_value(text: str) -> Any:
    p = _LiteralParser(text)
    v = p.value()
    if p.peek()[0] != "eof":
        raise UsageError(f"trailing text after value: {text!r}")
    return v


def parse_assignments(items: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items:
        name, eq, value = item.partition("=")
        if not eq or not name.strip():
            raise UsageError(f"input {item!r} must look like name=value")
        out[name.strip()] = parse_value(value)
    return out


def parse_case(line: str) -> tuple[dict[str, Any], Any]:
    """One testbench line: ``a=3 b=[1, 2] => 8``."""
    lhs, arrow, rhs = line.partition("=>")
    if not arrow:
        raise UsageError(f"testbench line needs '=>': {line.strip()!r}")
    p = _LiteralParser(lhs)
    args = p.assignments()
    return args, parse_value(rhs)


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {format_value(x)}" for k, x in v.items()) + "}"
    return str(v)


def flatten(name: str, value: Any) -> dict[str, Any]:
    """Nested literal -> leaf paths like ``xs[0]`` and ``p.x``."""
    if isinstance(value, (list, tuple)):
        out = {}
        for i, v in enumerate(value):
            out.update(flatten(f"{name}[{i}]", v))
        return out
    if isinstance(value, str):
        return flatten(name, codec.pad_string(value, len(value.encode())))
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            out.update(flatten(f"{name}.{k}", v))
        return out
    return {name: value}


_PATH = re.compile(r"\[(\d+)\]|\.([A-Za-z_]\w*)")


def unflatten(leaves: dict[str, Any]) -> dict[str, Any]:
    """Inverse of :func:`flatten` over many leaves; returns top-level values."""
    root: dict[str, Any] = {}
    for path, value in leaves.items():
        m = re.match(r"[^\[.]+", path)
        head, rest = m.group(0), path[m.end():]
        keys: list[Any] = [head] + [int(i) if i else f for i, f in _PATH.findall(rest)]
        node: Any = root
        for k, nxt in zip(keys, keys[1:]):
            if isinstance(node, dict) and k not in node:
                node[k] = {}
            node = node[k]
        node[keys[-1]] = value

    def fix(v):
        if isinstance(v, dict) and v and all(isinstance(k, int) for k in v):
            return [fix(v[i]) for i in sorted(v)]
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        return v

    return {k: fix(v) for k, v in root.items()}


# --- targets ------------------------------------------------------------------

@dataclass
class RunConfig:
    path: Path
    entry: str | None = None
    passes: str | None = None
    backend: str = "cleartext"
    params: str = "tfhe_like"
    jobs: int = 1
    seed: int = 0
    inputs: dict[str, Any] = field(default_factory=dict)
    emit_ir: Path | None = None
    emit_gates: Path | None = None
    emit_stats: Path | None = None

    def __post_init__(self):
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if self.backend not in ("cleartext", "fhe"):
            raise UsageError("--backend must be cleartext or fhe")
        self.scheme()  # reject unknown presets and malformed files up front

    def scheme(self) -> B.SchemeParams:
        try:
            return B.load_params(self.params).with_seed(self.seed)
        except (ValueError, OSError) as exc:
            raise UsageError(str(exc)) from None


class Target:
    """A source program compiled on the fly, or a prebuilt ``.gates`` file."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.compiled: Compiled | None = None
        text = cfg.path.read_text()
        if cfg.path.suffix == ".gates":
            self.circuit = G.parse_gates(text)
        else:
            self.compiled = compile_source(text, cfg.entry, cfg.passes)
            self.circuit = self.compiled.circuit

    def input_bits(self, args: dict[str, Any]) -> list[int]:
        if self.compiled is not None:
            return encode_args(self.compiled.params, args)
        leaves: dict[str, Any] = {}
        for name, v in args.items():
            leaves.update(flatten(name, v))
        bits: list[int] = []
        for grp in self.circuit.inputs:
            if grp.name not in leaves:
                raise ValueError(f"missing input {grp.name}")
            v = int(leaves.pop(grp.name))
            lo = -(1 << (grp.width - 1)) if grp.signed else 0
            if not lo <= v < (1 << grp.width):
                raise ValueError(f"{grp.name}: {v} out of range for {grp.width} bits")
            bits.extend(codec.int_to_bits(v, grp.width))
        if leaves:
            raise ValueError(f"unknown inputs: {', '.join(sorted(leaves))}")
        return bits

    def decode(self, bits: Sequence[int]) -> Any:
        if self.compiled is not None:
            return decode_bits(self.compiled.ret, bits)
        leaves, pos = {}, 0
        for grp in self.circuit.outputs:
            leaves[grp.name] = codec.bits_to_int(bits[pos: pos + grp.width], grp.signed)
            pos += grp.width
        values = unflatten(leaves)
        return values["out"] if list(values) == ["out"] else values

    def run(self, args: dict[str, Any], backend_name: str):
        bits = self.input_bits(args)
        if backend_name == "cleartext":
            outs, stats = runtime.execute(self.circuit, bits, B.CleartextBackend(), self.cfg.jobs)
            flat = [b for grp in self.circuit.outputs for b in outs[grp.name]]
            return self.decode(flat), stats
        params = self.cfg.scheme()
        key = B.keygen(self.cfg.seed)
        cts = [B.encrypt_bit(key, b, params) for b in bits]
        outs, stats = runtime.execute(self.circuit, cts, B.NoiseModelBackend(key, params), self.cfg.jobs)
        flat_ct = [c for grp in self.circuit.outputs for c in outs[grp.name]]
        plain = []
        for i, c in enumerate(flat_ct):
            try:
                plain.append(B.decrypt_bit(key, c, params))
            except B.NoiseOverflow as exc:
                raise B.NoiseOverflow(exc.noise, exc.budget, bit_index=i) from None
        return self.decode(plain), stats


# --- commands -----------------------------------------------------------------

def _write(path: Path | None, text: str, out) -> None:
    if path is not None:
        path.write_text(text)
        print(f"wrote {path}", file=out)


def _stem(path: Path) -> Path:
    name = path.name
    for suffix in (".fhe.c", ".c", ".fhe"):
        if name.endswith(suffix):
            return path.with_name(name[: -len(suffix)])
    return path.with_suffix("")


def cmd_transpile(cfg: RunConfig, out) -> int:
    if cfg.path.suffix == ".gates":
        raise UsageError("transpile expects a source file")
    compiled = compile_source(cfg.path.read_text(), cfg.entry, cfg.passes)
    for w in compiled.warnings:
        print(w.format(str(cfg.path)), file=sys.stderr)
    stem = _stem(cfg.path)
    ir_path = cfg.emit_ir or stem.with_suffix(".ir")
    gates_path = cfg.emit_gates or stem.with_suffix(".gates")
    _write(ir_path, ir.serialize(compiled.ir), out)
    _write(gates_path, G.serialize_gates(compiled.circuit), out)
    print(f"entry {compiled.entry}", file=out)
    for stage, unit, count in compiled.stage_counts():
        print(f"{stage:<14} {count:>8} {unit}", file=out)
    print(compiled.report.table(), file=out)
    _write(cfg.emit_stats, compiled.report.kv() + "\n", out)
    return EXIT_OK


def cmd_run(cfg: RunConfig, out) -> int:
    target = Target(cfg)
    _emit_artifacts(cfg, target, out)
    value, stats = target.run(cfg.inputs, cfg.backend)
    print(f"out = {format_value(value)}", file=out)
    print(stats.table(), file=out)
    if stats.max_noise is not None:
        print(f"max observed noise: {stats.max_noise} (budget {cfg.scheme().noise_budget})", file=out)
    _write(cfg.emit_stats, stats.kv() + "\n", out)
    return EXIT_OK


def cmd_testbench(cfg: RunConfig, cases: list[tuple[dict[str, Any], Any]], out) -> int:
    target = Target(cfg)
    _emit_artifacts(cfg, target, out)
    failures = 0
    stats = None
    for args, expected in cases:
        shown = " ".join(f"{k}={format_value(v)}" for k, v in args.items())
        clear, stats = target.run(args, "cleartext")
        fhe, _ = target.run(args, "fhe")
        if clear == fhe == expected:
            print(f"PASS {shown} => {format_value(expected)}", file=out)
        else:
            failures += 1
            print(f"FAIL {shown}: expected {format_value(expected)}, cleartext {format_value(clear)}, "
                  f"fhe {format_value(fhe)}", file=out)
    total = len(cases)
    gates = target.circuit.gate_count()
    depth = stats.depth if stats is not None else target.circuit.depth()
    print(f"{total - failures}/{total} passed (gates {gates}, depth {depth})", file=out)
    return EXIT_MISMATCH if failures else EXIT_OK


def cmd_stats(cfg: RunConfig, out) -> int:
    target = Target(cfg)
    c = target.circuit
    lines = []
    if target.compiled is not None:
        lines.append(f"entry={target.compiled.entry}")
        for stage, unit, count in target.compiled.stage_counts():
            lines.append(f"stage.{stage.replace(' ', '_')}={count}")
        lines.append(target.compiled.report.kv())
    lines.append(f"inputs={c.num_input_wires}")
    lines.append(f"outputs={sum(g.width for g in c.outputs)}")
    lines.append(f"gates.total={c.gate_count()}")
    lines += [f"gates.{k}={v}" for k, v in c.counts_by_kind().items()]
    sched = runtime.schedule_levels(c)
    lines.append(f"depth={sched.depth}")
    lines.append(f"max_level_width={max((len(lv) for lv in sched.levels), default=0)}")
    text = "\n".join(lines) + "\n"
    out.write(text)
    _write(cfg.emit_stats, text, out)
    return EXIT_OK


def _emit_artifacts(cfg: RunConfig, target: Target, out) -> None:
    if target.compiled is not None and cfg.emit_ir is not None:
        _write(cfg.emit_ir, ir.serialize(target.compiled.ir), out)
    if cfg.emit_gates is not None:
        _write(cfg.emit_gates, G.serialize_gates(target.circuit), out)


# --- argument handling ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fhe-transpile", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runnable: bool):
        p.add_argument("path", type=Path, help="source file (.fhe.c) or, for run/testbench/stats, a .gates file")
        p.add_argument("--entry", help="function to compile (default: main, else the last function)")
        p.add_argument("--passes", default=None,
                       help="comma-separated passes from fold,dce,narrow,gates; '' disables optimization")
        p.add_argument("--emit-ir", type=Path, help="write the optimized IR here")
        p.add_argument("--emit-gates", type=Path, help="write the gate circuit here")
        p.add_argument("--emit-stats", type=Path, help="write key=value statistics here")
        if runnable:
            p.add_argument("--backend", choices=("cleartext", "fhe"), default="cleartext")
            p.add_argument("--params", default="tfhe_like", help="preset name or key=value params file")
            p.add_argument("--jobs", type=int, default=1)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--in", dest="inputs", action="append", default=[], metavar="NAME=VALUE")

    common(sub.add_parser("transpile", help="write .ir and .gates files"), runnable=False)
    common(sub.add_parser("run", help="execute on one backend"), runnable=True)
    tb = sub.add_parser("testbench", help="run both backends and compare with expectations")
    common(tb, runnable=True)
    tb.add_argument("--expect", help="expected result for the --in values")
    tb.add_argument("--batch", type=Path, help="file with one 'inputs => expected' case per line")
    common(sub.add_parser("stats", help="print circuit statistics"), runnable=False)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            path=args.path, entry=args.entry, passes=args.passes,
            backend=getattr(args, "backend", "cleartext"), params=getattr(args, "params", "tfhe_like"),
            jobs=getattr(args, "jobs", 1), seed=getattr(args, "seed", 0),
            inputs=parse_assignments(getattr(args, "inputs", [])),
            emit_ir=args.emit_ir, emit_gates=args.emit_gates, emit_stats=args.emit_stats)
        if args.command == "transpile":
            return cmd_transpile(cfg, out)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "stats":
            return cmd_stats(cfg, out)
        cases = []
        if args.expect is not None:
            cases.append((cfg.inputs, parse_value(args.expect)))
        if args.batch is not None:
            for line in args.batch.read_text().splitlines():
                if line.strip() and not line.lstrip().startswith("#"):
                    cases.append(parse_case(line))
        if not cases:
            raise UsageError("testbench needs --expect or --batch")
        return cmd_testbench(cfg, cases, out)
    except CompileError as exc:
        for d in exc.diagnostics:
            print(d.format(str(args.path)), file=sys.stderr)
        return EXIT_COMPILE
    except (G.CircuitError, G.GatesParseError, ir.IRError) as exc:
        print(f"{args.path}: error: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    except B.NoiseOverflow as exc:
        print(f"error: noise overflow at output bit {exc.bit_index}: noise {exc.noise} exceeds budget "
              f"{exc.budget}. Hint: use --params tfhe_like (bootstrapping) or a preset with a larger budget.",
              file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
