# %% [markdown]
# # From restricted C to an encrypted computation
#
# This walk-through compiles a small program, looks at each stage of the
# pipeline, and runs it on both the cleartext debug backend and the simulated
# FHE backend.

# %%
from fhe_transpiler import ir
from fhe_transpiler import booleanifier as G
from fhe_transpiler import pipeline as P

SOURCE = """
struct Point { u4 x; u4 y; };

u5 manhattan(Point a, Point b) {
    u5 dx = a.x > b.x ? (u5)(a.x - b.x) : (u5)(b.x - a.x);
    u5 dy = a.y > b.y ? (u5)(a.y - b.y) : (u5)(b.y - a.y);
    return dx + dy;
}
"""

compiled = P.compile_source(SOURCE)
for stage, unit, count in compiled.stage_counts():
    print(f"{stage:<14} {count:>6} {unit}")

# %% [markdown]
# The optimized IR is a typed dataflow graph over multi-bit values.

# %%
print(ir.serialize(compiled.ir))

# %% [markdown]
# After booleanification only single-bit gates remain. The header lists the
# input and output wire groups, one per scalar leaf of the parameters.

# %%
print("\n".join(G.serialize_gates(compiled.circuit).splitlines()[:8]))
print(compiled.circuit.counts_by_kind())

# %% [markdown]
# Run on the cleartext backend, then encrypt, execute and decrypt with the
# noise-model backend. Both must agree with the reference interpreter.

# %%
from fhe_transpiler.frontend import interpret

args = {"a": {"x": 2, "y": 13}, "b": {"x": 11, "y": 4}}
clear, _ = P.run_cleartext(compiled, args)
secret, stats = P.run_fhe(compiled, args, seed=42)
print("interpreter", interpret(compiled.program, compiled.entry, args))
print("cleartext  ", clear)
print("fhe        ", secret)
print(stats.table())
