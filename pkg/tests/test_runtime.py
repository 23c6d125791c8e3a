from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from fhe_transpiler import backend as B
from fhe_transpiler import booleanifier as G
from fhe_transpiler import ir, runtime
from fhe_transpiler.booleanifier import Gate, GateCircuit, WireGroup
from fhe_transpiler.codec import Scalar, bits_to_int, int_to_bits

from suite import chain_circuit, compile_suite, longest_path, suite_names, wide_circuit


def add8() -> GateCircuit:
    b = ir.IRBuilder("add8")
    x = b.add_input("a", Scalar(8))
    y = b.add_input("b", Scalar(8))
    b.add_output("out", b.emit("ADD", (x, y), 8), Scalar(8))
    return G.booleanify(b.build())


def run_fhe(c: GateCircuit, bits, jobs=1, shuffle=None, preset="tfhe_like", seed=0):
    params = B.preset(preset)
    key = B.keygen(seed)
    cts = [B.encrypt_bit(key, b, params) for b in bits]
    outs, stats = runtime.execute(c, cts, B.NoiseModelBackend(key, params), jobs, shuffle_rng=shuffle)
    flat = [B.decrypt_bit(key, x, params) for grp in c.outputs for x in outs[grp.name]]
    return flat, stats


@pytest.mark.parametrize("name", suite_names())
def test_schedule_is_valid_on_suite(name):
    c = compile_suite(name).circuit
    sched = runtime.schedule_levels(c)
    assert sched.problems(c) == []
    assert sched.depth == longest_path(c) == c.depth()


def test_adder_first_level_holds_independent_gates():
    c = add8()
    sched = runtime.schedule_levels(c)
    gates = {g.id: g for g in c.gates}
    first = [gates[i] for i in sched.levels[0]]
    a, b = c.inputs[0].wires, c.inputs[1].wires
    pairs = {(a[i], b[i]) for i in range(8)}
    assert sum(1 for g in first if g.kind == "XOR" and g.operands in pairs) == 8
    assert sum(1 for g in first if g.kind == "AND" and g.operands in pairs) == 8
    assert sched.depth == longest_path(c)


def test_adder_depth_grows_linearly():
    depths = []
    for n in (2, 4, 8, 16):
        b = ir.IRBuilder("add")
        x, y = b.add_input("a", Scalar(n)), b.add_input("b", Scalar(n))
        b.add_output("out", b.emit("ADD", (x, y), n), Scalar(n))
        depths.append(runtime.schedule_levels(G.booleanify(b.build())).depth)
    # two levels per bit along the carry chain
    assert [d2 - d1 for d1, d2 in zip(depths, depths[1:])] == [2 * 2, 2 * 4, 2 * 8]


def test_trivial_schedules():
    one = GateCircuit("one", (WireGroup("x", (0,)),), (WireGroup("o", (1,)),), (Gate(1, "NOT", (0,)),))
    assert runtime.schedule_levels(one).levels == ((1,),)
    two = GateCircuit("two", (WireGroup("x", (0, 1)),), (WireGroup("o", (2, 3)),),
                      (Gate(2, "NOT", (0,)), Gate(3, "NOT", (1,))))
    assert runtime.schedule_levels(two).levels == ((2, 3),)


def test_cycle_is_detected():
    cyc = GateCircuit("cyc", (WireGroup("x", (0,)),), (WireGroup("o", (1,)),),
                      (Gate(1, "AND", (0, 2)), Gate(2, "NOT", (1,))))
    with pytest.raises(G.CircuitError, match="cycle"):
        runtime.schedule_levels(cyc)


def test_invalid_schedule_is_reported():
    c = add8()
    levels = runtime.schedule_levels(c).levels
    swapped = runtime.Schedule((levels[1],) + (levels[0],) + levels[2:])
    assert any("earlier level" in p for p in swapped.problems(c))
    missing = runtime.Schedule(levels[:-1])
    assert any("exactly once" in p for p in missing.problems(c))


@pytest.mark.parametrize("jobs", [1, 2, 8])
def test_add_under_fhe_for_each_worker_count(jobs):
    c = add8()
    bits = int_to_bits(100, 8) + int_to_bits(55, 8)
    out, stats = run_fhe(c, bits, jobs)
    assert bits_to_int(out) == 155 == bits_to_int(G.evaluate_gates(c, bits))
    assert stats.parallelism == jobs


def test_forwarding_circuit_returns_inputs():
    c = GateCircuit("fwd", (WireGroup("x", (0, 1)),), (WireGroup("o", (2, 3)),),
                    (Gate(2, "COPY", (0,)), Gate(3, "COPY", (1,))))
    assert run_fhe(c, [1, 0])[0] == [1, 0]


def test_chain_identical_across_workers():
    c = chain_circuit(10_000)
    one, _ = run_fhe(c, [1, 1], jobs=1)
    eight, _ = run_fhe(c, [1, 1], jobs=8)
    assert one == eight == [1]  # 10,000 XORs with 1 cancel in pairs


def test_wide_circuit_parallel_and_shuffled_agree():
    c = wide_circuit(64, 80)
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, 64).tolist()
    ref = G.evaluate_gates(c, bits).tolist()
    for jobs in (1, 2, 8):
        assert run_fhe(c, bits, jobs)[0] == ref
    for seed in range(3):
        assert run_fhe(c, bits, 8, shuffle=random.Random(seed))[0] == ref


def test_input_shape_errors():
    c = add8()
    be = B.CleartextBackend()
    with pytest.raises(G.CircuitError):
        runtime.execute(c, [0] * 3, be)
    with pytest.raises(G.CircuitError, match="missing"):
        runtime.execute(c, {"a": [0] * 8}, be)
    with pytest.raises(G.CircuitError, match="needs 8 bits"):
        runtime.execute(c, {"a": [0] * 8, "b": [0] * 7}, be)
    with pytest.raises(ValueError):
        runtime.execute(c, [0] * 16, be, parallelism=0)


def test_backend_errors_propagate_from_workers():
    c = wide_circuit(64, 4)
    params = B.preset("tfhe_like")
    cts = [B.encrypt_bit(B.keygen(1), 0, params) for _ in range(64)]
    with pytest.raises(B.KeyMismatch):
        runtime.execute(c, cts, B.NoiseModelBackend(B.keygen(2), params), parallelism=4)


def test_named_inputs_match_flat_inputs():
    c = add8()
    be = B.CleartextBackend()
    named, _ = runtime.execute(c, {"a": int_to_bits(9, 8), "b": int_to_bits(30, 8)}, be)
    flat, _ = runtime.execute(c, int_to_bits(9, 8) + int_to_bits(30, 8), be)
    assert named == flat and bits_to_int(named["out"]) == 39


def test_stats_are_consistent():
    c = compile_suite("divmod").circuit
    _, stats = runtime.execute(c, [0] * c.num_input_wires, B.CleartextBackend())
    assert stats.total_gates == c.gate_count()
    assert stats.counts == c.counts_by_kind()
    assert stats.depth == longest_path(c)
    assert stats.level_max_noise is None
    kv = dict(line.split("=", 1) for line in stats.kv().splitlines())
    assert int(kv["gates.total"]) == sum(int(v) for k, v in kv.items() if k.startswith("gates.") and k != "gates.total")
    assert "wall_time_s" not in stats.kv(with_time=False)


def test_noise_is_tracked_per_level():
    c = chain_circuit(20, "AND")
    out, stats = run_fhe(c, [1, 1], preset="leveled_large")
    params = B.preset("leveled_large")
    assert out == [1]
    assert stats.level_max_noise == [params.fresh_noise + params.gate_noise["AND"] * (i + 1) for i in range(20)]


def test_concurrent_executions_are_independent():
    c = add8()

    def job(v):
        bits = int_to_bits(v, 8) + int_to_bits(v, 8)
        return bits_to_int(run_fhe(c, bits, jobs=2, seed=v)[0])

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(job, range(40)))
    assert results == [(2 * v) & 255 for v in range(40)]
