from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhe_transpiler import booleanifier as G
from fhe_transpiler import ir
from fhe_transpiler.codec import Scalar

from suite import GOLDEN, compile_suite, suite_names

BINARY = ["ADD", "SUB", "MUL", "UDIV", "UMOD", "SDIV", "SMOD", "AND", "OR", "XOR",
          "EQ", "NE", "ULT", "ULE", "SLT", "SLE"]


def single_node(kind: str, widths: list[int], out_width: int, attr: int | None = None) -> ir.IRFunction:
    b = ir.IRBuilder(kind.lower())
    ids = [b.add_input(f"x{i}", Scalar(w)) for i, w in enumerate(widths)]
    n = b.emit(kind, ids, out_width, attr)
    b.add_output("out", n, Scalar(out_width))
    return b.build()


def adder(n: int) -> G.GateCircuit:
    return G.booleanify(single_node("ADD", [n, n], n))


def exhaustive_check(f: ir.IRFunction) -> None:
    c = G.booleanify(f)
    assert G.check_circuit(c) == []
    widths = [p.width for p in f.inputs]
    total = sum(widths)
    patterns = np.arange(1 << total, dtype=np.int64)
    bits = np.array([(patterns >> i) & 1 for i in range(total)], dtype=np.uint8)
    got = G.evaluate_gates(c, bits)
    weights = np.array([1 << i for i in range(got.shape[0])], dtype=np.int64)
    got_words = (got.astype(np.int64) * weights[:, None]).sum(axis=0)
    for v, word in zip(patterns.tolist(), got_words.tolist()):
        args, pos = {}, 0
        for p in f.inputs:
            args[p.name] = (v >> pos) & ((1 << p.width) - 1)
            pos += p.width
        assert word == ir.evaluate(f, args)[0], (f.nodes[-1].kind, args)


@pytest.mark.parametrize("n", [1, 4, 8, 16, 32, 64])
def test_adder_matches_full_adder_chain(n):
    c = adder(n)
    a, b = c.inputs[0].wires, c.inputs[1].wires
    assert c.logic_gate_count() == 5 * n
    assert c.counts_by_kind()["CONST0"] == 1
    const0 = c.gates[0]
    assert const0.kind == "CONST0"
    carry = const0.id
    groups = [c.gates[1 + 5 * i: 6 + 5 * i] for i in range(n)]
    sums = []
    for i, (t, s, c1, c2, cout) in enumerate(groups):
        assert (t.kind, t.operands) == ("XOR", (a[i], b[i]))
        assert (s.kind, s.operands) == ("XOR", (t.id, carry))
        assert (c1.kind, c1.operands) == ("AND", (carry, t.id))
        assert (c2.kind, c2.operands) == ("AND", (a[i], b[i]))
        assert (cout.kind, cout.operands) == ("OR", (c2.id, c1.id))
        carry = cout.id
        sums.append(s.id)
    assert c.outputs[0].wires == tuple(sums)


def test_adder_depth_grows_with_width():
    depths = [adder(n).depth() for n in (1, 2, 4, 8, 16, 32)]
    assert depths == sorted(depths) and len(set(depths)) == len(depths)


@pytest.mark.parametrize("kind", BINARY)
@pytest.mark.parametrize("w", [1, 2, 3, 4])
def test_binary_lowering_is_exact(kind, w):
    exhaustive_check(single_node(kind, [w, w], 1 if kind in ir.COMPARISONS else w))


@pytest.mark.parametrize("kind, widths, out, attr", [
    ("NOT", [4], 4, None), ("NEG", [4], 4, None), ("NEG", [1], 1, None),
    ("SHL_CONST", [5], 5, 2), ("SHR_CONST", [5], 5, 3), ("SHL_CONST", [3], 3, 7),
    ("SLICE", [6], 3, 2), ("ZEXT", [3], 6, None), ("SEXT", [3], 6, None),
    ("CONCAT", [2, 3], 5, None), ("SELECT", [1, 3, 3], 3, None),
])
def test_unary_and_structural_lowering_is_exact(kind, widths, out, attr):
    exhaustive_check(single_node(kind, widths, out, attr))


def test_literal_lowering_uses_shared_constants():
    b = ir.IRBuilder("lits")
    b.add_output("x", b.literal(0b1010, 4), Scalar(4))
    b.add_output("y", b.literal(0b0110, 4), Scalar(4))
    c = G.booleanify(b.build())
    assert c.counts_by_kind()["CONST0"] == 1 and c.counts_by_kind()["CONST1"] == 1
    assert G.evaluate_words(c, {}) == {"x": 0b1010, "y": 0b0110}


@pytest.mark.parametrize("name", suite_names())
def test_gate_optimize_preserves_suite(name):
    c = compile_suite(name)
    opt = G.gate_optimize(c.circuit)
    assert G.check_circuit(opt) == []
    assert opt.gate_count() <= c.circuit.gate_count()
    n = c.circuit.num_input_wires
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(n, 256), dtype=np.uint8)
    assert np.array_equal(G.evaluate_gates(c.circuit, bits), G.evaluate_gates(opt, bits))


def test_gate_optimize_simplifies_constants():
    c = adder(8)
    opt = G.gate_optimize(c)
    # the CONST0 carry-in turns the first full adder into a half adder
    assert opt.logic_gate_count() < c.logic_gate_count()
    assert G.gate_optimize(opt) == opt


def test_gate_optimize_keeps_forwarded_inputs_as_copies():
    b = ir.IRBuilder("fwd")
    x = b.add_input("x", Scalar(2))
    b.add_output("out", b.emit("NOT", (b.emit("NOT", (x,), 2),), 2), Scalar(2))
    opt = G.gate_optimize(G.booleanify(b.build()))
    assert [g.kind for g in opt.gates] == ["COPY", "COPY"]
    assert G.evaluate_words(opt, {"x": 2}) == {"out": 2}


def test_batch_evaluation_matches_single():
    c = compile_suite("compare").circuit
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=(c.num_input_wires, 32), dtype=np.uint8)
    batch = G.evaluate_gates(c, bits)
    for j in range(32):
        assert np.array_equal(batch[:, j], G.evaluate_gates(c, bits[:, j]))


def test_evaluate_rejects_wrong_input_width():
    with pytest.raises(G.CircuitError):
        G.evaluate_gates(adder(4), [0, 1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255))
def test_evaluate_words_on_adder(a, b):
    assert G.evaluate_words(adder(8), {"x0": a, "x1": b}) == {"out": (a + b) & 255}


@pytest.mark.parametrize("name", suite_names())
def test_gates_round_trip_on_suite(name):
    c = compile_suite(name).circuit
    text = G.serialize_gates(c)
    assert G.parse_gates(text) == c
    assert G.serialize_gates(G.parse_gates(text)) == text


@pytest.mark.parametrize("name", suite_names())
def test_golden_gates_are_stable(name):
    assert G.serialize_gates(compile_suite(name).circuit) == (GOLDEN / f"{name}.gates").read_text()


@pytest.mark.parametrize("text, needle", [
    ("circuit f\ninputs a:x\noutputs\n", "name:width"),
    ("circuit f\ninputs a:1\noutputs o:1\nw1 = NOT(q0)\noutput o = w1\n", "wire"),
    ("circuit f\ninputs a:1\noutputs o:1\nw1 = NOT(w5)\noutput o = w1\n", "undefined"),
])
def test_parse_gates_errors(text, needle):
    with pytest.raises(G.CircuitError, match=needle):
        G.parse_gates(text)


def test_check_circuit_finds_problems():
    good = adder(2)
    bad = G.GateCircuit(good.name, good.inputs, good.outputs,
                        good.gates + (G.Gate(99, "AND", (0,)),))
    problems = G.check_circuit(bad)
    assert any("expects 2 operands" in p for p in problems)
    assert any("out of order" in p for p in problems)


def test_signed_groups_survive_round_trip():
    c = compile_suite("sub").circuit
    text = G.serialize_gates(c)
    assert "signed inputs a b" in text and "signed outputs out" in text
    parsed = G.parse_gates(text)
    assert [g.signed for g in parsed.inputs] == [True, True]


def test_small_widths_exhaustive_divmod_signed():
    for w in (1, 2, 3):
        for a, b in itertools.product(range(1 << w), repeat=2):
            f = single_node("SDIV", [w, w], w)
            c = G.booleanify(f)
            bits = [(a >> i) & 1 for i in range(w)] + [(b >> i) & 1 for i in range(w)]
            word = sum(int(x) << i for i, x in enumerate(G.evaluate_gates(c, bits)))
            assert word == ir.eval_node("SDIV", None, w, [a, b], [w, w])
