"""End-to-end helpers: source text to circuit, and typed values through it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from . import backend as B
from . import booleanifier as G
from . import codec, ir, optimizer, runtime
from .frontend import CompileError, Diagnostic, check_restrictions, lint, lower_to_ir, parse
from .frontend.ast import Program
from .frontend.lower import DEFAULT_NODE_LIMIT


@dataclass
class Compiled:
    program: Program
    entry: str
    raw_ir: ir.IRFunction
    ir: ir.IRFunction
    circuit: G.GateCircuit
    report: optimizer.PassReport
    params: list[tuple[str, codec.Layout]]
    ret: codec.Layout
    warnings: list[Diagnostic] = field(default_factory=list)

    def stage_counts(self) -> list[tuple[str, str, int]]:
        """(stage, unit, count) for each stage of the pipeline."""
        return [
            ("frontend", "IR nodes", self.raw_ir.node_count()),
            ("optimizer", "IR nodes", self.ir.node_count()),
            ("booleanifier", "gates", self.circuit.gate_count()),
            ("circuit depth", "levels", self.circuit.depth()),
        ]


def default_entry(program: Program) -> str:
    """``main`` if defined, otherwise the last function in the file."""
    if "main" in program.functions:
        return "main"
    if not program.functions:
        raise CompileError([])
    return list(program.functions)[-1]


def as_pipeline(passes) -> optimizer.PassPipeline:
    if passes is None:
        return optimizer.PassPipeline()
    if isinstance(passes, optimizer.PassPipeline):
        return passes
    if isinstance(passes, str):
        return optimizer.PassPipeline.parse(passes)
    return optimizer.PassPipeline(tuple(passes))


def compile_source(source: str, entry: str | None = None, passes=None,
                   node_limit: int | None = DEFAULT_NODE_LIMIT) -> Compiled:
    """Parse, check, lower, optimize and booleanify; raises CompileError."""
    program = parse(source)
    errors = check_restrictions(program)
    if errors:
        raise CompileError(errors)
    entry = entry or default_entry(program)
    raw = lower_to_ir(program, entry, node_limit=node_limit)
    pipeline = as_pipeline(passes)
    optimized, report = optimizer.run(raw, pipeline)
    circuit = G.booleanify(optimized)
    if pipeline.gate_level():
        circuit = G.gate_optimize(circuit)
    fn = program.functions[entry]
    return Compiled(program, entry, raw, optimized, circuit, report,
                    program.param_layouts(entry), fn.ret, lint(program))


def encode_args(params: list[tuple[str, codec.Layout]], args: Mapping[str, Any]) -> list[int]:
    """Natural argument values -> circuit input bits (parameter order, LSB first)."""
    missing = [n for n, _ in params if n not in args]
    if missing:
        raise ValueError(f"missing arguments: {', '.join(missing)}")
    extra = set(args) - {n for n, _ in params}
    if extra:
        raise ValueError(f"unknown arguments: {', '.join(sorted(extra))}")
    bits: list[int] = []
    for name, layout in params:
        try:
            bits.extend(codec.encode(args[name], layout).bits)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"argument {name}: {exc}") from None
    return bits


def ir_inputs(params: list[tuple[str, codec.Layout]], args: Mapping[str, Any]) -> dict[str, int]:
    """Natural argument values -> IR input leaf values (unsigned bit patterns)."""
    out = {}
    for name, layout in params:
        bits = codec.encode(args[name], layout).bits
        for path, sc, off in codec.leaves(layout, name):
            out[path] = codec.bits_to_int(bits[off: off + sc.width])
    return out


def decode_bits(ret: codec.Layout, bits) -> Any:
    return codec.decode(codec.EncodedValue(ret, tuple(int(b) for b in bits)))


def decode_ir_outputs(ret: codec.Layout, outputs: Mapping[int, int]) -> Any:
    bits: list[int] = []
    for i, (_, sc, _) in enumerate(codec.leaves(ret, "out")):
        bits.extend(codec.int_to_bits(outputs[i], sc.width))
    return decode_bits(ret, bits)


def run_ir(c: Compiled, args: Mapping[str, Any], which: str = "optimized") -> Any:
    f = c.ir if which == "optimized" else c.raw_ir
    return decode_ir_outputs(c.ret, ir.evaluate(f, ir_inputs(c.params, args)))


def run_gates(c: Compiled, args: Mapping[str, Any]) -> Any:
    return decode_bits(c.ret, G.evaluate_gates(c.circuit, encode_args(c.params, args)))


def run_cleartext(c: Compiled, args: Mapping[str, Any], jobs: int = 1):
    bits = encode_args(c.params, args)
    outs, stats = runtime.execute(c.circuit, bits, B.CleartextBackend(), parallelism=jobs)
    flat = [b for grp in c.circuit.outputs for b in outs[grp.name]]
    return decode_bits(c.ret, flat), stats


@dataclass
class FheSession:
    """Client-side state: key and parameters (encode, encrypt, decrypt, decode)."""

    params: B.SchemeParams
    seed: int = 0

    def __post_init__(self):
        self.key = B.keygen(self.seed)
        self.backend = B.NoiseModelBackend(self.key, self.params)

    def encrypt_args(self, c: Compiled, args: Mapping[str, Any]) -> list[B.CiphertextBit]:
        cts: list[B.CiphertextBit] = []
        for name, layout in c.params:
            cts.extend(codec.encrypt_value(self.key, codec.encode(args[name], layout), self.params).bits)
        return cts

    def decrypt_result(self, c: Compiled, cts: list[B.CiphertextBit]) -> Any:
        value = codec.FheValue(c.ret, tuple(cts), self.params)
        return codec.decode(codec.decrypt_value(self.key, value))


def run_fhe(c: Compiled, args: Mapping[str, Any], params: B.SchemeParams | None = None,
            seed: int = 0, jobs: int = 1, shuffle_rng=None):
    """Encrypt, execute on the noise-model backend, decrypt and decode."""
    session = FheSession(params or B.preset("tfhe_like"), seed)
    encode_args(c.params, args)  # validates names and ranges
    cts = session.encrypt_args(c, args)
    outs, stats = runtime.execute(c.circuit, cts, session.backend, parallelism=jobs,
                                  shuffle_rng=shuffle_rng)
    flat = [b for grp in c.circuit.outputs for b in outs[grp.name]]
    return session.decrypt_result(c, flat), stats
