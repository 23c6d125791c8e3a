from __future__ import annotations

import itertools

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fhe_transpiler import ir, optimizer
from fhe_transpiler import pipeline as P
from fhe_transpiler.codec import Scalar
from fhe_transpiler.frontend import interpret

from suite import cases, compile_suite, suite_names

SINGLE_PASSES = ["", "fold", "dce", "narrow", "fold,dce", "fold,dce,narrow,dce", "fold,dce,narrow,dce,gates"]


def agree_everywhere(c: P.Compiled) -> list[str]:
    bad = []
    for args in cases(c):
        ref = interpret(c.program, c.entry, args)
        got = (P.run_ir(c, args), P.run_gates(c, args))
        if got != (ref, ref):
            bad.append(f"{args}: {ref} vs {got}")
            if len(bad) > 5:
                break
    return bad


@pytest.mark.parametrize("passes", SINGLE_PASSES)
@pytest.mark.parametrize("name", ["compare", "constants", "dynindex", "early_return", "mul", "shift",
                                  "struct_field", "loop_sum"])
def test_each_pass_preserves_semantics(name, passes):
    assert agree_everywhere(compile_suite(name, passes)) == []


def test_fold_and_dce_shrink_constant_program():
    c = compile_suite("constants", "")
    folded, report = optimizer.run(c.raw_ir, optimizer.PassPipeline.parse("fold,dce"))
    assert folded.node_count() < c.raw_ir.node_count()
    assert report.final_nodes == folded.node_count()
    assert report.initial_nodes == c.raw_ir.node_count()


@pytest.mark.parametrize("name", suite_names())
def test_fixpoint_is_idempotent(name):
    c = compile_suite(name)
    again, report = optimizer.run(c.ir)
    assert again == c.ir
    assert report.converged and report.iterations == 1


def test_empty_pipeline_returns_input():
    c = compile_suite("divmod", "")
    f, report = optimizer.run(c.raw_ir, optimizer.PassPipeline.parse(""))
    assert f is c.raw_ir
    assert report.entries == []


def test_pipeline_parsing_and_toggles():
    p = optimizer.PassPipeline.parse(" fold , narrow ,gates")
    assert p.passes == ("fold", "narrow", "gates")
    assert p.ir_passes() == ["fold", "narrow"] and p.gate_level()
    off = optimizer.PassPipeline(("fold", "dce"), enabled=(False, True))
    assert off.active() == ["dce"]
    with pytest.raises(ValueError, match="unknown pass"):
        optimizer.PassPipeline.parse("fold,cse")
    with pytest.raises(ValueError):
        optimizer.PassPipeline(("fold",), enabled=(True, False))


def test_report_rendering():
    c = compile_suite("constants")
    assert "fold" in c.report.table()
    kv = dict(line.split("=", 1) for line in c.report.kv().splitlines())
    assert kv["ir.converged"] == "true"
    assert int(kv["ir.nodes.final"]) == c.ir.node_count()


def _mul_of_extensions() -> ir.IRFunction:
    b = ir.IRBuilder("f")
    x = b.add_input("x", Scalar(6))
    y = b.add_input("y", Scalar(6))
    zx = b.emit("ZEXT", (x,), 12)
    zy = b.emit("ZEXT", (y,), 12)
    b.add_output("out", b.emit("MUL", (zx, zy), 12), Scalar(12))
    return b.build()


def test_known_bits_of_extended_product():
    f = _mul_of_extensions()
    kz, ko = optimizer.known_bits(f)[f.outputs[0].id]
    assert ko == 0
    assert kz == 0  # 63 * 63 = 3969 needs all twelve bits


def test_known_bits_trailing_zeros_of_product():
    b = ir.IRBuilder("f")
    x = b.add_input("x", Scalar(8))
    s = b.emit("SHL_CONST", (x,), 8, 2)
    t = b.emit("SHL_CONST", (x,), 8, 1)
    b.add_output("out", b.emit("MUL", (s, t), 8), Scalar(8))
    f = b.build()
    kz, _ = optimizer.known_bits(f)[f.outputs[0].id]
    assert kz & 0b111 == 0b111


def test_narrowing_preserves_extended_product():
    f = _mul_of_extensions()
    g = optimizer.width_narrowing(f)
    for x, y in itertools.product(range(0, 64, 7), range(0, 64, 5)):
        assert ir.evaluate(g, {"x": x, "y": y}) == {0: x * y}


def test_narrowing_drops_undemanded_high_bits():
    b = ir.IRBuilder("f")
    x = b.add_input("x", Scalar(16))
    y = b.add_input("y", Scalar(16))
    s = b.emit("ADD", (x, y), 16)
    b.add_output("out", b.emit("SLICE", (s,), 4, 0), Scalar(4))
    f = b.build()
    g = optimizer.dead_node_elimination(optimizer.width_narrowing(f))
    adds = [n for n in g.nodes if n.kind == "ADD"]
    assert adds and all(n.width == 4 for n in adds)


def test_dce_removes_unused_nodes():
    b = ir.IRBuilder("f")
    x = b.add_input("x", Scalar(4))
    b.emit("NOT", (x,), 4)
    b.add_output("out", b.emit("NEG", (x,), 4), Scalar(4))
    g = optimizer.dead_node_elimination(b.build())
    assert [n.kind for n in g.nodes] == ["NEG"]


# --- random programs ------------------------------------------------------------

TYPES = ["u4", "i4", "u6"]


@st.composite
def expr(draw, ty: str, depth: int):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        choice = draw(st.integers(0, 2))
        if choice == 0:
            return f"({ty})a"
        if choice == 1:
            return f"({ty})b"
        return f"({ty}){draw(st.integers(0, 7))}"
    kind = draw(st.sampled_from(["bin", "bin", "cmp", "shift", "tern", "unary", "cast"]))
    if kind == "bin":
        op = draw(st.sampled_from(["+", "-", "*", "/", "%", "&", "|", "^"]))
        return f"({draw(expr(ty, depth - 1))} {op} {draw(expr(ty, depth - 1))})"
    if kind == "cmp":
        op = draw(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]))
        other = draw(st.sampled_from(TYPES))
        return f"({ty})({draw(expr(other, depth - 1))} {op} {draw(expr(other, depth - 1))})"
    if kind == "shift":
        op = draw(st.sampled_from(["<<", ">>"]))
        return f"({draw(expr(ty, depth - 1))} {op} (u2){draw(expr('u4', depth - 1))})"
    if kind == "tern":
        c = draw(expr("u4", depth - 1))
        return f"({c} > (u4)3 ? {draw(expr(ty, depth - 1))} : {draw(expr(ty, depth - 1))})"
    if kind == "unary":
        op = draw(st.sampled_from(["-", "~"]))
        return f"({ty})({op}{draw(expr(ty, depth - 1))})"
    return f"({ty}){draw(expr(draw(st.sampled_from(TYPES)), depth - 1))}"


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(TYPES), st.data())
def test_random_programs_agree_across_pipelines(ret, data):
    body = data.draw(expr(ret, 3))
    src = f"{ret} main(u4 a, i4 b) {{ return {body}; }}"
    compiled = [P.compile_source(src, passes=p) for p in ("", None, "fold,dce,narrow,dce,gates")]
    for a, b in itertools.product(range(16), range(-8, 8)):
        args = {"a": a, "b": b}
        ref = interpret(compiled[0].program, "main", args)
        for c in compiled:
            assert P.run_ir(c, args) == ref, (src, args)
            assert P.run_gates(c, args) == ref, (src, args)
