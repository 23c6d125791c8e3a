from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhe_transpiler import ir
from fhe_transpiler.codec import Scalar

from suite import GOLDEN, compile_suite, suite_names


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if v >> (w - 1) & 1 else v


def small_function() -> ir.IRFunction:
    b = ir.IRBuilder("f")
    a = b.add_input("a", Scalar(4))
    c = b.add_input("c", Scalar(4, signed=True))
    s = b.emit("ADD", (a, c), 4)
    lit = b.literal(3, 4)
    m = b.emit("MUL", (s, lit), 4)
    b.add_output("out", m, Scalar(4))
    b.add_output("lo", b.emit("SLICE", (m,), 2, 1), Scalar(2))
    return b.build()


def test_builder_dedupes_literals():
    b = ir.IRBuilder("f")
    assert b.literal(3, 4) == b.literal(19, 4)
    assert b.literal(3, 4) != b.literal(3, 5)
    assert b.build().node_count() == 2


def test_builder_node_limit():
    b = ir.IRBuilder("f", node_limit=2)
    x = b.add_input("x", Scalar(1))
    b.emit("NOT", (x,), 1)
    b.emit("NOT", (x,), 1)
    with pytest.raises(ir.IRError, match="node limit"):
        b.emit("NOT", (x,), 1)


def test_builder_rejects_wrong_arity():
    b = ir.IRBuilder("f")
    x = b.add_input("x", Scalar(1))
    with pytest.raises(ir.IRError):
        b.emit("ADD", (x,), 1)


def test_validate_accepts_builder_output():
    assert ir.validate(small_function()) == []
    assert ir.check(small_function()) == small_function()


@pytest.mark.parametrize("mutate, needle", [
    (lambda f: f.nodes[:-1] + (ir.IRNode(f.nodes[-1].id, "ADD", (0, 99), 4),), "dangling"),
    (lambda f: f.nodes[:-1] + (ir.IRNode(f.nodes[-1].id, "BOGUS", (0,), 4),), "unknown kind"),
    (lambda f: f.nodes[:-1] + (ir.IRNode(f.nodes[-1].id, "SLICE", (0,), 0, 1),), "non-positive width"),
    (lambda f: f.nodes[:-1] + (ir.IRNode(f.nodes[-1].id, "SLICE", (0,), 2),), "attribute"),
])
def test_validate_reports_problems(mutate, needle):
    f = small_function()
    broken = ir.IRFunction(f.name, f.inputs, f.outputs, mutate(f))
    problems = ir.validate(broken)
    assert any(needle in p for p in problems), problems
    with pytest.raises(ir.IRError):
        ir.check(broken)


def test_evaluate_small_function():
    out = ir.evaluate(small_function(), {"a": 5, "c": 0b1110})  # 5 + (-2) = 3, times 3 = 9
    assert out == {0: 9, 1: (9 >> 1) & 3}


def test_evaluate_rejects_missing_input():
    with pytest.raises(ir.IRError):
        ir.evaluate(small_function(), {"a": 1})


@pytest.mark.parametrize("kind, args, expected", [
    ("UDIV", [5, 0], 15),
    ("UMOD", [5, 0], 5),
    ("SDIV", [5, 0], 15),
    ("SMOD", [0b1011, 0], 0b1011),
    ("SDIV", [8, 15], 8),          # -8 / -1 wraps back to -8
    ("SMOD", [8, 15], 0),
    ("SDIV", [0b1001, 2], 13),     # -7 / 2 truncates to -3
    ("SMOD", [0b1001, 2], 15),     # remainder takes the dividend's sign
])
def test_division_edge_cases(kind, args, expected):
    assert ir.eval_node(kind, None, 4, args, [4, 4]) == expected


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12), st.data())
def test_eval_node_matches_python_integers(w, data):
    m = (1 << w) - 1
    a = data.draw(st.integers(0, m))
    b = data.draw(st.integers(0, m))
    ev = lambda k: ir.eval_node(k, None, w if k not in ir.COMPARISONS else 1, [a, b], [w, w])
    sa, sb = _signed(a, w), _signed(b, w)
    assert ev("ADD") == (a + b) & m
    assert ev("SUB") == (a - b) & m
    assert ev("MUL") == (a * b) & m
    assert ev("ULT") == int(a < b)
    assert ev("SLE") == int(sa <= sb)
    assert ev("EQ") == int(a == b)
    if b:
        assert ev("UDIV") == a // b
        assert ev("UMOD") == a % b
        q = abs(sa) // abs(sb) * (1 if (sa < 0) == (sb < 0) else -1)
        assert ev("SDIV") == q & m
        assert ev("SMOD") == (sa - q * sb) & m


def test_extension_and_slicing():
    assert ir.eval_node("SEXT", None, 8, [0b1010], [4]) == 0b11111010
    assert ir.eval_node("ZEXT", None, 8, [0b1010], [4]) == 0b1010
    assert ir.eval_node("SLICE", 1, 2, [0b0110], [4]) == 0b11
    assert ir.eval_node("CONCAT", None, 6, [0b01, 0b1111], [2, 4]) == 0b111101
    assert ir.eval_node("SHR_CONST", 2, 4, [0b1100], [4]) == 0b0011
    assert ir.eval_node("SHL_CONST", 3, 4, [0b0011], [4]) == 0b1000


def test_parse_errors_carry_positions():
    with pytest.raises(ir.IRParseError) as e:
        ir.parse_ir("fn f\nin a %0:u4\n%1:4 = FOO(%0)\n")
    assert (e.value.line, e.value.col) == (3, 8)
    with pytest.raises(ir.IRParseError):
        ir.parse_ir("garbage")


def test_renumber_is_identity_on_canonical_ids():
    f = small_function()
    assert ir.renumber(f) == f


@pytest.mark.parametrize("name", suite_names())
def test_serialize_round_trip_on_suite(name):
    c = compile_suite(name)
    for f in (c.raw_ir, c.ir):
        text = ir.serialize(f)
        assert ir.parse_ir(text) == f
        assert ir.serialize(ir.parse_ir(text)) == text


@pytest.mark.parametrize("name", suite_names())
def test_golden_ir_is_stable(name):
    assert ir.serialize(compile_suite(name).ir) == (GOLDEN / f"{name}.ir").read_text()
