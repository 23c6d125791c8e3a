# %% [markdown]
# # Level scheduling and parallel execution
#
# Gates are grouped into levels of mutually independent gates. Each level may
# be split across worker threads and the end of a level is a barrier, so the
# result is the same for every worker count and every order inside a level.

# %%
import random
import time

from fhe_transpiler import backend as B
from fhe_transpiler import pipeline as P
from fhe_transpiler import runtime

compiled = P.compile_source("""
u8 main(u8 xs[8]) {
    u8 acc = 0;
    for (int i = 0; i < 8; i++) {
        acc += xs[i] * xs[7 - i];
    }
    return acc;
}
""")
sched = runtime.schedule_levels(compiled.circuit)
widths = [len(level) for level in sched.levels]
print(f"{compiled.circuit.gate_count()} gates in {sched.depth} levels; widest level {max(widths)}")

# %%
args = {"xs": [3, 1, 4, 1, 5, 9, 2, 6]}
results = set()
for jobs in (1, 2, 8):
    start = time.perf_counter()
    value, _ = P.run_fhe(compiled, args, jobs=jobs, shuffle_rng=random.Random(jobs))
    results.add(value)
    print(f"jobs={jobs}: {value} in {time.perf_counter() - start:.2f}s")
print("identical across worker counts:", len(results) == 1)
