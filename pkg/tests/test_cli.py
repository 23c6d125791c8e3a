from __future__ import annotations

import io
import random
import re
import shutil
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhe_transpiler import booleanifier as G
from fhe_transpiler import cli, ir
from fhe_transpiler import pipeline as P

from suite import INVALID, PROGRAMS


def run(argv) -> tuple[int, str]:
    out = io.StringIO()
    code = cli.main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def workdir(tmp_path):
    for name in ("sum", "struct_field", "loop_sum", "mul", "divmod"):
        shutil.copy(PROGRAMS / f"{name}.fhe.c", tmp_path)
    return tmp_path


# --- literals -----------------------------------------------------------------------

@pytest.mark.parametrize("text, value", [
    ("5", 5), ("-3", -3), ("0x1f", 31), ("true", True), ("false", False),
    ("[1, 2,3]", [1, 2, 3]), ("{x:3,y:10}", {"x": 3, "y": 10}),
    ("[{a: [1]}, {a: [-2]}]", [{"a": [1]}, {"a": [-2]}]), ('"hi"', "hi"), ("[]", []),
])
def test_parse_value(text, value):
    assert cli.parse_value(text) == value


@pytest.mark.parametrize("text", ["", "[1,", "{x 3}", "1 2", "@"])
def test_parse_value_errors(text):
    with pytest.raises(cli.UsageError):
        cli.parse_value(text)


def test_parse_case_and_assignments():
    assert cli.parse_case("a=3 b=[1, 2] => 8") == ({"a": 3, "b": [1, 2]}, 8)
    assert cli.parse_case("p={x: 1, y: 2} => {q: 0, r: 1}") == ({"p": {"x": 1, "y": 2}}, {"q": 0, "r": 1})
    assert cli.parse_assignments(["a=5", "xs=[1,2]"]) == {"a": 5, "xs": [1, 2]}
    with pytest.raises(cli.UsageError):
        cli.parse_case("a=3 b=5")
    with pytest.raises(cli.UsageError):
        cli.parse_assignments(["a"])


values = st.recursive(
    st.integers(-100, 100),
    lambda inner: st.lists(inner, min_size=1, max_size=3)
    | st.dictionaries(st.sampled_from(["x", "y", "z"]), inner, min_size=1, max_size=3),
    max_leaves=10)


@settings(max_examples=200, deadline=None)
@given(values)
def test_format_parse_and_flatten_round_trip(v):
    assert cli.parse_value(cli.format_value(v)) == v
    assert cli.unflatten(cli.flatten("v", v)) == {"v": v}


# --- transpile ------------------------------------------------------------------------

def test_transpile_writes_ir_and_gates(workdir):
    code, out = run(["transpile", workdir / "sum.fhe.c"])
    assert code == 0
    c = G.parse_gates((workdir / "sum.gates").read_text())
    assert c.num_input_wires == 16 and sum(g.width for g in c.outputs) == 8
    ir.parse_ir((workdir / "sum.ir").read_text())
    for stage in ("frontend", "optimizer", "booleanifier", "circuit depth"):
        assert stage in out


def test_transpile_recursion_fails(capsys):
    code, _ = run(["transpile", INVALID / "recursion_direct.fhe.c"])
    assert code == cli.EXIT_COMPILE
    assert "error[RECURSION]" in capsys.readouterr().err


def test_transpile_with_empty_pipeline_emits_raw_ir(workdir):
    path = workdir / "mul.fhe.c"
    code, _ = run(["transpile", path, "--passes", "", "--emit-ir", workdir / "raw.ir"])
    assert code == 0
    raw = P.compile_source(path.read_text(), passes="").raw_ir
    assert (workdir / "raw.ir").read_text() == ir.serialize(raw)


def test_transpile_emit_stats(workdir):
    code, _ = run(["transpile", workdir / "sum.fhe.c", "--emit-stats", workdir / "s.txt"])
    assert code == 0
    assert "ir.converged=true" in (workdir / "s.txt").read_text()


# --- run ------------------------------------------------------------------------------------

def test_run_gates_file_under_fhe(workdir):
    run(["transpile", workdir / "sum.fhe.c"])
    code, out = run(["run", workdir / "sum.gates", "--in", "a=100", "--in", "b=55", "--backend", "fhe"])
    assert code == 0
    assert out.splitlines()[0] == "out = 155"
    assert "max observed noise: 10 (budget 100)" in out


def test_run_source_with_struct_and_array_inputs(workdir):
    code, out = run(["run", workdir / "struct_field.fhe.c", "--in", "p={x:3,y:5}", "--in", "q={x:2,y:7}"])
    assert (code, out.splitlines()[0]) == (0, "out = 41")
    code, out = run(["run", workdir / "loop_sum.fhe.c", "--in", "xs=[1,2,3,7]", "--backend", "fhe", "--jobs", "2"])
    assert (code, out.splitlines()[0]) == (0, "out = 13")


def test_run_struct_result_from_gates_file(workdir):
    run(["transpile", workdir / "divmod.fhe.c"])
    code, out = run(["run", workdir / "divmod.gates", "--in", "a=-7", "--in", "b=2"])
    assert (code, out.splitlines()[0]) == (0, "out = {q: -3, r: -1}")


def test_run_noise_overflow_exit_code(workdir, capsys):
    code, _ = run(["run", workdir / "mul.fhe.c", "--in", "a=7", "--in", "b=9", "--backend", "fhe",
                   "--params", "leveled_small"])
    err = capsys.readouterr().err
    assert code == cli.EXIT_RUNTIME
    assert re.search(r"noise overflow at output bit \d+", err)
    assert "tfhe_like" in err
    code, out = run(["run", workdir / "mul.fhe.c", "--in", "a=7", "--in", "b=9", "--backend", "fhe",
                     "--params", "leveled_large"])
    assert (code, out.splitlines()[0]) == (0, "out = 63")


def test_run_is_reproducible_apart_from_wall_time(workdir):
    argv = ["run", workdir / "mul.fhe.c", "--in", "a=11", "--in", "b=13", "--backend", "fhe", "--seed", "4",
            "--jobs", "2", "--emit-stats", workdir / "stats.txt"]

    def scrub(text):
        return re.sub(r"[\d.]+ ms|wall_time_s=[\d.]+", "<time>", text)

    _, first = run(argv)
    s1 = (workdir / "stats.txt").read_text()
    _, second = run(argv)
    s2 = (workdir / "stats.txt").read_text()
    assert scrub(first) == scrub(second)
    assert scrub(s1) == scrub(s2)


@pytest.mark.parametrize("argv", [
    ["--in", "a=1"],
    ["--in", "a=1", "--in", "b=2", "--in", "c=3"],
    ["--in", "a=300", "--in", "b=1"],
    ["--in", "a=1", "--in", "b=1", "--jobs", "0"],
    ["--in", "a=1", "--in", "b=1", "--params", "nonsense"],
])
def test_run_input_errors(workdir, argv):
    code, _ = run(["run", workdir / "sum.fhe.c"] + argv)
    assert code == cli.EXIT_RUNTIME


# --- testbench --------------------------------------------------------------------------------

def test_testbench_pass(workdir):
    code, out = run(["testbench", workdir / "sum.fhe.c", "--in", "a=3", "--in", "b=5", "--expect", "8"])
    assert code == 0
    assert "PASS a=3 b=5 => 8" in out
    assert "gates 41" in out and "depth" in out


def test_testbench_mismatch(workdir):
    code, out = run(["testbench", workdir / "sum.fhe.c", "--in", "a=3", "--in", "b=5", "--expect", "9"])
    assert code == cli.EXIT_MISMATCH
    assert "FAIL a=3 b=5: expected 9, cleartext 8, fhe 8" in out


def test_testbench_batch_of_random_adds(workdir):
    rng = random.Random(11)
    lines = []
    for _ in range(100):
        a, b = rng.randrange(256), rng.randrange(256)
        lines.append(f"a={a} b={b} => {(a + b) % 256}")
    (workdir / "cases.txt").write_text("# random additions\n" + "\n".join(lines) + "\n")
    code, out = run(["testbench", workdir / "sum.fhe.c", "--batch", workdir / "cases.txt"])
    assert code == 0
    assert out.count("PASS") == 100
    assert "100/100 passed" in out


def test_testbench_needs_cases(workdir):
    code, _ = run(["testbench", workdir / "sum.fhe.c"])
    assert code == cli.EXIT_RUNTIME


# --- stats and module entry point --------------------------------------------------------------

def test_stats(workdir):
    code, out = run(["stats", workdir / "sum.fhe.c"])
    kv = dict(line.split("=", 1) for line in out.splitlines())
    assert code == 0
    assert kv["inputs"] == "16" and kv["outputs"] == "8"
    assert kv["gates.total"] == "41" and kv["depth"] == kv["stage.circuit_depth"]


def test_python_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "fhe_transpiler", "run", str(workdir / "sum.fhe.c"),
                           "--in", "a=200", "--in", "b=100"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "out = 44"
