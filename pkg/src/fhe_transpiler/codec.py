"""Typed plaintext values <-> ordered bit vectors, plus the encrypted wrappers.

A :data:`Layout` describes how a value of a declared type is laid out as bits:

* scalars are LSB-first, signed scalars in two's complement;
* array elements are contiguous, index 0 first;
* struct fields follow declaration order with no alignment padding.

The frontend uses the same layout classes as its type representation, so the
bit positions of a function parameter are identical whether they are derived
here or by the compiler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Sequence, Union

from . import backend as _backend


@dataclass(frozen=True)
class Scalar:
    width: int
    signed: bool = False
    boolean: bool = False

    def __post_init__(self):
        if not 1 <= self.width <= 64:
            raise ValueError(f"scalar width must be in 1..64, got {self.width}")
        if self.boolean and (self.width != 1 or self.signed):
            raise ValueError("bool is an unsigned 1-bit scalar")

    @property
    def total_bits(self) -> int:
        return self.width

    @property
    def min_value(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max_value(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def __str__(self):
        if self.boolean:
            return "bool"
        return f"{'i' if self.signed else 'u'}{self.width}"


@dataclass(frozen=True)
class Array:
    elem: "Layout"
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"array length must be positive, got {self.length}")

    @property
    def total_bits(self) -> int:
        return self.elem.total_bits * self.length

    def __str__(self):
        return f"{self.elem}[{self.length}]"


@dataclass(frozen=True)
class Struct:
    name: str
    fields: tuple[tuple[str, "Layout"], ...]

    def __post_init__(self):
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate field in struct {self.name}")
        if not self.fields:
            raise ValueError(f"struct {self.name} has no fields")

    @property
    def total_bits(self) -> int:
        return sum(layout.total_bits for _, layout in self.fields)

    def field(self, name: str) -> "Layout":
        for n, layout in self.fields:
            if n == name:
                return layout
        raise KeyError(name)

    def __str__(self):
        return self.name


Layout = Union[Scalar, Array, Struct]

BOOL = Scalar(1, boolean=True)
U8 = Scalar(8)


def scalar(name: str) -> Scalar:
    """Parse a scalar type name such as ``u8``, ``i12`` or ``bool``."""
    if name == "bool":
        return BOOL
    if len(name) >= 2 and name[0] in "ui" and name[1:].isdigit():
        return Scalar(int(name[1:]), signed=name[0] == "i")
    raise ValueError(f"not a scalar type: {name!r}")


def string_layout(max_len: int) -> Array:
    return Array(U8, max_len)


def leaves(layout: Layout, prefix: str = "") -> Iterator[tuple[str, Scalar, int]]:
    """Yield ``(path, scalar, bit_offset)`` for every scalar in layout order."""
    offset = 0

    def walk(lay, path):
        nonlocal offset
        if isinstance(lay, Scalar):
            yield path, lay, offset
            offset += lay.width
        elif isinstance(lay, Array):
            for i in range(lay.length):
                yield from walk(lay.elem, f"{path}[{i}]")
        else:
            for name, sub in lay.fields:
                yield from walk(sub, f"{path}.{name}" if path else name)

    yield from walk(layout, prefix)


def dump_layout(layout: Layout, name: str = "value") -> str:
    lines = [f"# {name}: {layout} ({layout.total_bits} bits)"]
    for path, sc, off in leaves(layout, name):
        lines.append(f"{path} {sc} offset={off} width={sc.width}")
    return "\n".join(lines) + "\n"


def int_to_bits(value: int, width: int) -> list[int]:
    value &= (1 << width) - 1
    return [(value >> i) & 1 for i in range(width)]


def bits_to_int(bits: Sequence[int], signed: bool = False) -> int:
    value = 0
    for i, b in enumerate(bits):
        value |= (int(b) & 1) << i
    if signed and bits and bits[-1]:
        value -= 1 << len(bits)
    return value


def to_signed(value: int, width: int) -> int:
    value &= (1 << width) - 1
    return value - (1 << width) if value >> (width - 1) else value


def pad_string(s: str | bytes, max_len: int) -> list[int]:
    data = s.encode() if isinstance(s, str) else bytes(s)
    if len(data) > max_len:
        raise ValueError(f"string of {len(data)} bytes exceeds maximum length {max_len}")
    return list(data) + [0] * (max_len - len(data))


def unpad_string(values: Sequence[int]) -> str:
    data = bytes(values).rstrip(b"\0")
    return data.decode()


@dataclass(frozen=True)
class EncodedValue:
    layout: Layout
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != self.layout.total_bits:
            raise ValueError(
                f"{len(self.bits)} bits do not match layout {self.layout} "
                f"({self.layout.total_bits} bits)")


@dataclass(frozen=True)
class FheValue:
    layout: Layout
    bits: tuple[Any, ...]
    params: _backend.SchemeParams

    def __post_init__(self):
        if len(self.bits) != self.layout.total_bits:
            raise ValueError("ciphertext bit count does not match layout")
        if len({c.key_id for c in self.bits}) > 1:
            raise ValueError("ciphertext bits were produced under different keys")


def _encode_bits(value: Any, layout: Layout, out: list[int], path: str):
    if isinstance(layout, Scalar):
        if isinstance(value, bool):
            value = int(value)
        if not isinstance(value, int):
            raise TypeError(f"{path or 'value'}: expected an integer for {layout}, got {value!r}")
        if not layout.min_value <= value <= layout.max_value:
            raise ValueError(f"{path or 'value'}: {value} out of range for {layout}")
        out.extend(int_to_bits(value, layout.width))
    elif isinstance(layout, Array):
        if isinstance(value, (str, bytes)) and layout.elem == U8:
            value = pad_string(value, layout.length)
        if len(value) != layout.length:
            raise ValueError(
                f"{path or 'value'}: expected {layout.length} elements, got {len(value)}")
        for i, item in enumerate(value):
            _encode_bits(item, layout.elem, out, f"{path}[{i}]")
    else:
        if set(value) != {n for n, _ in layout.fields}:
            raise ValueError(f"{path or 'value'}: fields {sorted(value)} do not match struct {layout.name}")
        for name, sub in layout.fields:
            _encode_bits(value[name], sub, out, f"{path}.{name}")


def encode(value: Any, layout: Layout) -> EncodedValue:
    bits: list[int] = []
    _encode_bits(value, layout, bits, "")
    return EncodedValue(layout, tuple(bits))


def _decode_bits(bits: Sequence[int], layout: Layout) -> Any:
    if isinstance(layout, Scalar):
        v = bits_to_int(bits, layout.signed)
        return bool(v) if layout.boolean else v
    if isinstance(layout, Array):
        n = layout.elem.total_bits
        return [_decode_bits(bits[i * n:(i + 1) * n], layout.elem) for i in range(layout.length)]
    result = {}
    pos = 0
    for name, sub in layout.fields:
        result[name] = _decode_bits(bits[pos:pos + sub.total_bits], sub)
        pos += sub.total_bits
    return result


def decode(encoded: EncodedValue) -> Any:
    return _decode_bits(encoded.bits, encoded.layout)


def encrypt_value(key: _backend.SecretKey, encoded: EncodedValue,
                  params: _backend.SchemeParams) -> FheValue:
    bits = tuple(_backend.encrypt_bit(key, b, params) for b in encoded.bits)
    return FheValue(encoded.layout, bits, params)


def decrypt_value(key: _backend.SecretKey, value: FheValue) -> EncodedValue:
    bits = []
    for i, c in enumerate(value.bits):
        try:
            bits.append(_backend.decrypt_bit(key, c, value.params))
        except _backend.NoiseOverflow as exc:
            raise _backend.NoiseOverflow(exc.noise, exc.budget, bit_index=i) from None
    return EncodedValue(value.layout, tuple(bits))
