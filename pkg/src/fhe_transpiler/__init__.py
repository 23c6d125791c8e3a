"""Restricted-C to gate-circuit transpiler with pluggable gate backends."""

from __future__ import annotations

from .backend import (CleartextBackend, NoiseModelBackend, NoiseOverflow, SchemeParams, keygen,
                      preset)
from .booleanifier import GateCircuit, booleanify, evaluate_gates, gate_optimize
from .frontend import CompileError, check_restrictions, lower_to_ir, parse
from .ir import IRFunction, evaluate
from .optimizer import PassPipeline
from .pipeline import compile_source
from .runtime import execute, schedule_levels

__version__ = "0.1.0"

__all__ = [
    "CleartextBackend", "CompileError", "GateCircuit", "IRFunction", "NoiseModelBackend",
    "NoiseOverflow", "PassPipeline", "SchemeParams", "booleanify", "check_restrictions",
    "compile_source", "evaluate", "evaluate_gates", "execute", "gate_optimize", "keygen",
    "lower_to_ir", "parse", "preset", "schedule_levels",
]
