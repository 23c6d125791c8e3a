"""Gate backends: a cleartext debug backend and a noise-model FHE simulator.

The noise-model backend reproduces the *behaviour* of a TFHE-style gate API:
every ciphertext bit is a payload hidden under a keyed pseudorandom mask and
carries an integer noise ledger. With ``bootstrap_mode="per_gate"`` every gate
output is refreshed to ``refresh_noise`` (unbounded depth); with ``"off"``
noise accumulates as ``max(operand noise) + gate_noise[kind]`` and decryption
fails once it exceeds ``noise_budget`` (leveled behaviour).

This is a semantic simulator for testing the transpiler. It provides no
security whatsoever.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

GATE_KINDS = ("AND", "OR", "XOR", "NOT", "MUX", "COPY")
BOOTSTRAP_MODES = ("per_gate", "off")

_M64 = (1 << 64) - 1


class NoiseOverflow(Exception):
    """Raised when decrypting a ciphertext whose noise exceeds the budget."""

    def __init__(self, noise: int, budget: int, bit_index: int | None = None):
        self.noise = noise
        self.budget = budget
        self.bit_index = bit_index
        where = f" at bit {bit_index}" if bit_index is not None else ""
        super().__init__(f"noise {noise} exceeds budget {budget}{where}")


class KeyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SchemeParams:
    noise_budget: int
    fresh_noise: int
    gate_noise: Mapping[str, int]
    bootstrap_mode: str = "per_gate"
    refresh_noise: int = 0
    key_seed: int = 0

    def __post_init__(self):
        unknown = set(self.gate_noise) - set(GATE_KINDS)
        if unknown:
            raise ValueError(f"unknown gate kinds in gate_noise: {sorted(unknown)}")
        noise = {k: int(self.gate_noise.get(k, 0)) for k in GATE_KINDS}
        object.__setattr__(self, "gate_noise", noise)
        if self.bootstrap_mode not in BOOTSTRAP_MODES:
            raise ValueError(f"bootstrap_mode must be one of {BOOTSTRAP_MODES}")
        if self.noise_budget < 0 or self.fresh_noise < 0 or self.refresh_noise < 0:
            raise ValueError("noise quantities must be non-negative")
        if any(v < 0 for v in noise.values()):
            raise ValueError("gate noise increments must be non-negative")
        if self.fresh_noise > self.noise_budget:
            raise ValueError("fresh_noise exceeds noise_budget")
        if self.refresh_noise > self.noise_budget:
            raise ValueError("refresh_noise exceeds noise_budget")
        if (self.bootstrap_mode == "per_gate"
                and self.refresh_noise + max(noise.values()) > self.noise_budget):
            raise ValueError("per_gate mode needs refresh_noise + max(gate_noise) <= noise_budget")

    def max_depth(self, kind: str = "AND") -> int | None:
        """Longest chain of ``kind`` gates over fresh inputs that still decrypts.

        ``None`` means unbounded (bootstrapping, or a zero increment).
        """
        inc = self.gate_noise[kind]
        if self.bootstrap_mode == "per_gate" or inc == 0:
            return None
        return (self.noise_budget - self.fresh_noise) // inc

    def with_seed(self, seed: int) -> "SchemeParams":
        return replace(self, key_seed=seed)


# Illustrative numbers: XOR is cheap (addition), AND/OR/MUX are multiplications.
PRESETS: dict[str, SchemeParams] = {
    "tfhe_like": SchemeParams(
        noise_budget=100, fresh_noise=10, refresh_noise=10, bootstrap_mode="per_gate",
        gate_noise={"AND": 20, "OR": 20, "XOR": 20, "MUX": 30, "NOT": 0, "COPY": 0}),
    "leveled_small": SchemeParams(
        noise_budget=170, fresh_noise=10, refresh_noise=10, bootstrap_mode="off",
        gate_noise={"AND": 10, "OR": 10, "XOR": 2, "MUX": 10, "NOT": 0, "COPY": 0}),
    "leveled_large": SchemeParams(
        noise_budget=1290, fresh_noise=10, refresh_noise=10, bootstrap_mode="off",
        gate_noise={"AND": 10, "OR": 10, "XOR": 2, "MUX": 10, "NOT": 0, "COPY": 0}),
}


def preset(name: str) -> SchemeParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown parameter preset {name!r}; choose from {sorted(PRESETS)}") from None


_PARAM_KEYS = {
    "budget": "noise_budget", "noise_budget": "noise_budget",
    "fresh": "fresh_noise", "fresh_noise": "fresh_noise",
    "refresh": "refresh_noise", "refresh_noise": "refresh_noise",
    "bootstrap": "bootstrap_mode", "bootstrap_mode": "bootstrap_mode",
    "seed": "key_seed", "key_seed": "key_seed",
}


def parse_params(text: str) -> SchemeParams:
    """Parse ``key=value`` lines; ``base=<preset>`` selects defaults (tfhe_like)."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        entries.append((lineno, k, v))
    base = next((v for _, k, v in entries if k == "base"), "tfhe_like")
    p = preset(base)
    fields: dict[str, Any] = {
        "noise_budget": p.noise_budget, "fresh_noise": p.fresh_noise,
        "refresh_noise": p.refresh_noise, "bootstrap_mode": p.bootstrap_mode,
        "key_seed": p.key_seed, "gate_noise": dict(p.gate_noise),
    }
    for lineno, k, v in entries:
        if k == "base":
            continue
        if k.startswith("gate_noise."):
            kind = k.split(".", 1)[1].upper()
            if kind not in GATE_KINDS:
                raise ValueError(f"line {lineno}: unknown gate kind {kind!r}")
            fields["gate_noise"][kind] = int(v, 0)
        elif k in _PARAM_KEYS:
            name = _PARAM_KEYS[k]
            fields[name] = v if name == "bootstrap_mode" else int(v, 0)
        else:
            raise ValueError(f"line {lineno}: unknown parameter {k!r}")
    return SchemeParams(**fields)


def load_params(name: str) -> SchemeParams:
    """Resolve a preset name or a path to a key/value parameter file."""
    if name in PRESETS:
        return PRESETS[name]
    path = Path(name)
    if path.is_file():
        return parse_params(path.read_text())
    raise ValueError(f"{name!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file")


def _mix64(x: int) -> int:
    # splitmix64 finaliser
    z = (x + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


class _NonceCounter:
    def __init__(self, start: int):
        self._next = start
        self._lock = threading.Lock()

    def take(self) -> int:
        with self._lock:
            n = self._next
            self._next = (n + 1) & _M64
        return n


_unmask_lock = threading.Lock()
_unmask_calls = 0


def unmask_count() -> int:
    """Number of payload unmaskings so far; only decryption may increase it."""
    return _unmask_calls


@dataclass(frozen=True)
class SecretKey:
    seed: int
    material: int
    _nonces: _NonceCounter = field(compare=False, repr=False)

    @property
    def key_id(self) -> int:
        return _mix64(self.material ^ 0x5EC2E7)

    def mask(self, nonce: int) -> int:
        return _mix64(nonce ^ self.material) >> 63

    def fresh_nonce(self) -> int:
        return self._nonces.take()

    def _unmask(self, c: "CiphertextBit") -> int:
        global _unmask_calls
        with _unmask_lock:
            _unmask_calls += 1
        return c.masked_payload ^ self.mask(c.nonce)


def keygen(seed: int) -> SecretKey:
    seed &= _M64
    material = _mix64(_mix64(seed) ^ 0xC0FFEE)
    return SecretKey(seed, material, _NonceCounter(_mix64(material) & 0xFFFFFFFF))


@dataclass(frozen=True, slots=True)
class CiphertextBit:
    masked_payload: int
    nonce: int
    noise: int
    key_id: int


def encrypt_bit(key: SecretKey, bit: int, params: SchemeParams) -> CiphertextBit:
    nonce = key.fresh_nonce()
    return CiphertextBit((int(bit) & 1) ^ key.mask(nonce), nonce, params.fresh_noise, key.key_id)


def decrypt_bit(key: SecretKey, c: CiphertextBit, params: SchemeParams) -> int:
    if c.key_id != key.key_id:
        raise KeyMismatch("ciphertext was encrypted under a different key")
    if c.noise > params.noise_budget:
        raise NoiseOverflow(c.noise, params.noise_budget)
    return key._unmask(c)


class GateBackend(ABC):
    """The gate API a circuit is executed against.

    Implementations only need the primitive gates; ``mux`` defaults to
    ``OR(AND(s, t), AND(NOT(s), e))`` for backends without a native MUX.
    """

    name = "abstract"

    @abstractmethod
    def constant(self, bit: int) -> Any: ...

    @abstractmethod
    def not_(self, a: Any) -> Any: ...

    @abstractmethod
    def and_(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def or_(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def xor(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def copy(self, a: Any) -> Any: ...

    def mux(self, s: Any, t: Any, e: Any) -> Any:
        return self.or_(self.and_(s, t), self.and_(self.not_(s), e))

    def noise(self, value: Any) -> int | None:
        return None

    def dispatch(self) -> dict[str, Any]:
        """Gate kind -> callable taking operand values."""
        return {
            "AND": self.and_, "OR": self.or_, "XOR": self.xor, "NOT": self.not_,
            "MUX": self.mux, "COPY": self.copy,
            "CONST0": lambda: self.constant(0), "CONST1": lambda: self.constant(1),
        }


class CleartextBackend(GateBackend):
    """Plain boolean logic over 0/1 integers, for debugging."""

    name = "cleartext"

    def constant(self, bit):
        return int(bit) & 1

    def not_(self, a):
        return a ^ 1

    def and_(self, a, b):
        return a & b

    def or_(self, a, b):
        return a | b

    def xor(self, a, b):
        return a ^ b

    def copy(self, a):
        return a

    def mux(self, s, t, e):
        return t if s else e


class NoiseModelBackend(GateBackend):
    """TFHE-style gate API over masked bits with an explicit noise ledger.

    Gates recombine masked payloads and masks (never the unmasked bits) and
    re-mask the result under a fresh nonce.
    """

    name = "fhe"

    def __init__(self, key: SecretKey, params: SchemeParams):
        self.key = key
        self.params = params
        self._inc = params.gate_noise
        self._bootstrap = params.bootstrap_mode == "per_gate"

    def _check(self, *operands: CiphertextBit):
        kid = self.key.key_id
        for c in operands:
            if c.key_id != kid:
                raise KeyMismatch("operand was produced under a different key")

    def _noise(self, kind: str, *operands: CiphertextBit) -> int:
        if self._bootstrap:
            return self.params.refresh_noise
        return max(c.noise for c in operands) + self._inc[kind]

    def _emit(self, combined: int, noise: int) -> CiphertextBit:
        # combined = plaintext XOR (masks folded in by the caller); re-mask it
        nonce = self.key.fresh_nonce()
        return CiphertextBit((combined ^ self.key.mask(nonce)) & 1, nonce, noise, self.key.key_id)

    def _and_terms(self, pa, ka, pb, kb):
        # (pa^ka)&(pb^kb) expanded so no factor equals a bare plaintext bit
        return (pa & pb) ^ (pa & kb) ^ (ka & pb) ^ (ka & kb)

    def constant(self, bit):
        return self._emit(int(bit) & 1, 0)

    def not_(self, a):
        self._check(a)
        return self._emit(a.masked_payload ^ 1 ^ self.key.mask(a.nonce), self._noise("NOT", a))

    def copy(self, a):
        self._check(a)
        return self._emit(a.masked_payload ^ self.key.mask(a.nonce), self._noise("COPY", a))

    def xor(self, a, b):
        self._check(a, b)
        mask = self.key.mask
        combined = a.masked_payload ^ b.masked_payload ^ mask(a.nonce) ^ mask(b.nonce)
        return self._emit(combined, self._noise("XOR", a, b))

    def and_(self, a, b):
        self._check(a, b)
        mask = self.key.mask
        combined = self._and_terms(a.masked_payload, mask(a.nonce), b.masked_payload, mask(b.nonce))
        return self._emit(combined, self._noise("AND", a, b))

    def or_(self, a, b):
        self._check(a, b)
        mask = self.key.mask
        pa, ka, pb, kb = a.masked_payload, mask(a.nonce), b.masked_payload, mask(b.nonce)
        combined = pa ^ ka ^ pb ^ kb ^ self._and_terms(pa, ka, pb, kb)
        return self._emit(combined, self._noise("OR", a, b))

    def mux(self, s, t, e):
        self._check(s, t, e)
        mask = self.key.mask
        ps, ks = s.masked_payload, mask(s.nonce)
        pe, ke = e.masked_payload, mask(e.nonce)
        px, kx = t.masked_payload ^ pe, mask(t.nonce) ^ ke
        # e ^ (s & (t ^ e))
        combined = pe ^ ke ^ self._and_terms(ps, ks, px, kx)
        return self._emit(combined, self._noise("MUX", s, t, e))

    def noise(self, value: CiphertextBit) -> int:
        return value.noise

    def encrypt(self, bit: int) -> CiphertextBit:
        return encrypt_bit(self.key, bit, self.params)

    def decrypt(self, c: CiphertextBit) -> int:
        return decrypt_bit(self.key, c, self.params)
