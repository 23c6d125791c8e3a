"""Plaintext semantics of the source language's scalar operators.

Typed values are held as unsigned bit patterns of their type's width; integer
literals that have not met a typed operand are plain Python ints (``UNTYPED``).
These rules define what a program *means*; the reference interpreter is built
on them and the lowered IR is checked against it.
"""

from __future__ import annotations

from ..codec import BOOL, Scalar, to_signed
from .ast import UNTYPED


class ConstantError(ArithmeticError):
    pass


def mask(width: int) -> int:
    return (1 << width) - 1


def natural(value: int, ty) -> int | bool:
    """Bit pattern -> Python value (signed ints, bools)."""
    if ty is UNTYPED:
        return value
    if ty.boolean:
        return bool(value)
    return to_signed(value, ty.width) if ty.signed else value


def from_natural(value: int, ty: Scalar) -> int:
    return int(value) & mask(ty.width)


def convert(value: int, src, dst) -> int:
    if dst is UNTYPED:
        return value
    if src is UNTYPED:
        return int(value != 0) if dst.boolean else value & mask(dst.width)
    if dst.boolean and not src.boolean:
        return int(value != 0)
    if dst.width <= src.width:
        return value & mask(dst.width)
    if src.signed:
        return to_signed(value, src.width) & mask(dst.width)
    return value


def literal_fits(value: int, ty: Scalar) -> bool:
    if ty.boolean:
        return True
    return -(1 << (ty.width - 1)) <= value <= mask(ty.width)


def unify(a, b, op_class: str):
    """Common operand type for a binary operator.

    ``op_class`` is ``"arith"`` or ``"bitwise"``; bools stay bools only under
    bitwise operators.
    """
    if a is UNTYPED and b is UNTYPED:
        return UNTYPED
    if a is UNTYPED or b is UNTYPED:
        t = b if a is UNTYPED else a
        if t.boolean and op_class == "arith":
            return Scalar(1)
        return t
    if a.boolean and b.boolean:
        return BOOL if op_class == "bitwise" else Scalar(1)
    return Scalar(max(a.width, b.width), signed=a.signed and b.signed)


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def binary(op: str, a: int, b: int, ty) -> int:
    """Apply an arithmetic, bitwise or comparison operator.

    Both operands are already converted to ``ty``. Comparisons return 0/1.
    """
    if ty is UNTYPED:
        return _binary_untyped(op, a, b)
    m = mask(ty.width)
    if op in ("==", "!=", "<", "<=", ">", ">="):
        if ty.signed:
            a, b = to_signed(a, ty.width), to_signed(b, ty.width)
        return int({"==": a == b, "!=": a != b, "<": a < b,
                    "<=": a <= b, ">": a > b, ">=": a >= b}[op])
    if op == "+":
        return (a + b) & m
    if op == "-":
        return (a - b) & m
    if op == "*":
        return (a * b) & m
    if op in ("/", "%"):
        if ty.signed:
            sa, sb = to_signed(a, ty.width), to_signed(b, ty.width)
            if sb == 0:
                return m if op == "/" else a
            q = _trunc_div(sa, sb)
            return (q if op == "/" else sa - q * sb) & m
        if b == 0:
            return m if op == "/" else a
        return a // b if op == "/" else a % b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    raise ValueError(f"unknown operator {op}")


def _binary_untyped(op: str, a: int, b: int) -> int:
    if op in ("/", "%"):
        if b == 0:
            raise ConstantError("division by zero in constant expression")
        q = _trunc_div(a, b)
        return q if op == "/" else a - q * b
    table = {
        "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
        "&": lambda: a & b, "|": lambda: a | b, "^": lambda: a ^ b,
        "==": lambda: int(a == b), "!=": lambda: int(a != b), "<": lambda: int(a < b),
        "<=": lambda: int(a <= b), ">": lambda: int(a > b), ">=": lambda: int(a >= b),
    }
    return table[op]()


def shift(op: str, a: int, amount: int, ty) -> int:
    """Shift ``a`` (of type ``ty``) by a non-negative amount."""
    if ty is UNTYPED:
        if amount < 0:
            raise ConstantError("negative shift amount in constant expression")
        return a << amount if op == "<<" else a >> amount
    w = ty.width
    if op == "<<":
        return 0 if amount >= w else (a << amount) & mask(w)
    if ty.signed:
        s = to_signed(a, w)
        return (s >> min(amount, w - 1)) & mask(w)
    return 0 if amount >= w else a >> amount


def unary(op: str, a: int, ty) -> int:
    if op == "!":
        return int(a == 0)
    if ty is UNTYPED:
        return -a if op == "-" else ~a
    m = mask(ty.width)
    return (-a) & m if op == "-" else (~a) & m
