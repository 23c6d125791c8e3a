"""Regenerate tests/golden from the suite programs.

Run ``python tests/make_golden.py`` only after an intentional change to an
output format or lowering; the golden tests then pin the new output.
"""

from __future__ import annotations

from fhe_transpiler import booleanifier as G
from fhe_transpiler import codec, ir

from suite import GOLDEN, compile_suite, suite_names


def render_layouts() -> str:
    parts = []
    for name in suite_names():
        c = compile_suite(name)
        parts.append(f"== {name}")
        for pname, layout in c.params:
            parts.append(codec.dump_layout(layout, pname))
        parts.append(codec.dump_layout(c.ret, "out"))
    return "\n".join(parts) + "\n"


def main() -> None:
    GOLDEN.mkdir(exist_ok=True)
    for name in suite_names():
        c = compile_suite(name)
        (GOLDEN / f"{name}.ir").write_text(ir.serialize(c.ir))
        (GOLDEN / f"{name}.gates").write_text(G.serialize_gates(c.circuit))
    (GOLDEN / "layouts.txt").write_text(render_layouts())


if __name__ == "__main__":
    main()
