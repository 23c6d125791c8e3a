# %% [markdown]
# # Noise budgets: leveled parameters versus bootstrapping
#
# Every gate adds noise under leveled parameters, so circuits deeper than the
# budget allows stop decrypting. With per-gate bootstrapping the noise is reset
# after each gate and depth no longer matters.

# %%
from fhe_transpiler import backend as B

for name in sorted(B.PRESETS):
    p = B.preset(name)
    print(f"{name:<14} mode={p.bootstrap_mode:<8} budget={p.noise_budget:<5} "
          f"max AND depth={p.max_depth('AND')}")

# %% [markdown]
# Build AND chains of growing length and find where decryption starts to fail.

# %%
def chain_survives(depth: int, params: B.SchemeParams) -> bool:
    key = B.keygen(1)
    be = B.NoiseModelBackend(key, params)
    x = B.encrypt_bit(key, 1, params)
    y = B.encrypt_bit(key, 1, params)
    for _ in range(depth):
        x = be.and_(x, y)
    try:
        return B.decrypt_bit(key, x, params) == 1
    except B.NoiseOverflow:
        return False


small = B.preset("leveled_small")
print([d for d in range(1, 20) if not chain_survives(d, small)][:1], "is the first failing depth")
print("tfhe_like survives depth 5000:", chain_survives(5000, B.preset("tfhe_like")))

# %% [markdown]
# A real program shows the same effect: a 6-bit multiplier is too deep for
# `leveled_small` but fine for `leveled_large` and `tfhe_like`.

# %%
from fhe_transpiler import pipeline as P

mul = P.compile_source("u12 main(u6 a, u6 b) { return (u12)a * (u12)b; }")
print("circuit depth", mul.circuit.depth())
for name in ("leveled_small", "leveled_large", "tfhe_like"):
    try:
        value, stats = P.run_fhe(mul, {"a": 45, "b": 37}, params=B.preset(name))
        print(f"{name:<14} -> {value} (max noise {stats.max_noise})")
    except B.NoiseOverflow as exc:
        print(f"{name:<14} -> {exc}")
