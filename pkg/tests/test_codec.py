from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhe_transpiler import backend as B
from fhe_transpiler import codec
from fhe_transpiler import pipeline as P
from fhe_transpiler.codec import Array, Scalar, Struct

from suite import GOLDEN

scalars = st.builds(Scalar, st.integers(1, 16), st.booleans()) | st.just(codec.BOOL)


def layouts(depth: int = 3):
    if depth == 0:
        return scalars
    sub = layouts(depth - 1)
    structs = st.lists(sub, min_size=1, max_size=3).map(
        lambda items: Struct("S", tuple((f"f{i}", lay) for i, lay in enumerate(items))))
    arrays = st.builds(Array, sub, st.integers(1, 3))
    return scalars | structs | arrays


def value_for(layout):
    if isinstance(layout, Scalar):
        if layout.boolean:
            return st.booleans()
        return st.integers(layout.min_value, layout.max_value)
    if isinstance(layout, Array):
        return st.lists(value_for(layout.elem), min_size=layout.length, max_size=layout.length)
    return st.fixed_dictionaries({name: value_for(sub) for name, sub in layout.fields})


@settings(max_examples=1000, deadline=None)
@given(st.data())
def test_encode_decode_round_trip(data):
    layout = data.draw(layouts())
    value = data.draw(value_for(layout))
    enc = codec.encode(value, layout)
    assert len(enc.bits) == layout.total_bits
    assert codec.decode(enc) == value


@settings(max_examples=200, deadline=None)
@given(st.data(), st.integers(0, 2**32))
def test_encrypt_decrypt_round_trip(data, seed):
    layout = data.draw(layouts(2))
    value = data.draw(value_for(layout))
    params = B.preset("tfhe_like")
    key = B.keygen(seed)
    fv = codec.encrypt_value(key, codec.encode(value, layout), params)
    assert codec.decode(codec.decrypt_value(key, fv)) == value


def test_twos_complement_and_lsb_first():
    assert codec.encode(-2, Scalar(4, signed=True)).bits == (0, 1, 1, 1)
    assert codec.encode(6, Scalar(4)).bits == (0, 1, 1, 0)
    assert codec.bits_to_int([1, 1, 1, 1], signed=True) == -1
    assert codec.to_signed(0b1000, 4) == -8


def test_struct_fields_pack_in_declaration_order():
    layout = Struct("P", (("x", Scalar(3)), ("y", Scalar(2))))
    assert codec.encode({"x": 5, "y": 2}, layout).bits == (1, 0, 1, 0, 1)
    assert [(p, off) for p, _, off in codec.leaves(layout, "p")] == [("p.x", 0), ("p.y", 3)]


def test_strings_pad_and_strip():
    layout = codec.string_layout(6)
    enc = codec.encode("hi", layout)
    assert codec.decode(enc) == [104, 105, 0, 0, 0, 0]
    assert codec.unpad_string(codec.decode(enc)) == "hi"
    with pytest.raises(ValueError, match="exceeds"):
        codec.encode("toolong!", layout)


@pytest.mark.parametrize("value, layout, err", [
    (16, Scalar(4), ValueError),
    (-1, Scalar(4), ValueError),
    (8, Scalar(4, signed=True), ValueError),
    ("x", Scalar(4), TypeError),
    ([1, 2], Array(Scalar(4), 3), ValueError),
    ({"x": 1}, Struct("P", (("x", Scalar(2)), ("y", Scalar(2)))), ValueError),
])
def test_encode_rejects_bad_values(value, layout, err):
    with pytest.raises(err):
        codec.encode(value, layout)


@pytest.mark.parametrize("build", [
    lambda: Scalar(0), lambda: Scalar(65), lambda: Scalar(2, boolean=True),
    lambda: Array(Scalar(1), 0), lambda: Struct("E", ()),
    lambda: Struct("D", (("a", Scalar(1)), ("a", Scalar(1)))),
])
def test_invalid_layouts(build):
    with pytest.raises(ValueError):
        build()


def test_scalar_names():
    assert codec.scalar("u12") == Scalar(12)
    assert codec.scalar("i5") == Scalar(5, signed=True)
    assert codec.scalar("bool") is codec.BOOL
    with pytest.raises(ValueError):
        codec.scalar("float")


def test_encoded_value_checks_length():
    with pytest.raises(ValueError):
        codec.EncodedValue(Scalar(4), (0, 1))


def test_decrypt_reports_failing_bit():
    params = B.preset("leveled_small")
    key = B.keygen(0)
    be = B.NoiseModelBackend(key, params)
    fresh = [B.encrypt_bit(key, 1, params) for _ in range(3)]
    noisy = fresh[1]
    for _ in range(params.max_depth("AND") + 1):
        noisy = be.and_(noisy, noisy)
    fv = codec.FheValue(Scalar(3), (fresh[0], noisy, fresh[2]), params)
    with pytest.raises(B.NoiseOverflow) as e:
        codec.decrypt_value(key, fv)
    assert e.value.bit_index == 1


def test_fhe_value_rejects_mixed_keys():
    params = B.preset("tfhe_like")
    bits = (B.encrypt_bit(B.keygen(1), 0, params), B.encrypt_bit(B.keygen(2), 0, params))
    with pytest.raises(ValueError, match="different keys"):
        codec.FheValue(Scalar(2), bits, params)


def test_frontend_layouts_match_codec():
    src = """
    struct Inner { i3 a; bool b; };
    struct Outer { Inner items[2]; u5 tag; };
    u5 main(Outer o, u2 xs[3], char s[4]) { return o.tag; }
    """
    c = P.compile_source(src)
    inner = Struct("Inner", (("a", Scalar(3, signed=True)), ("b", codec.BOOL)))
    outer = Struct("Outer", (("items", Array(inner, 2)), ("tag", Scalar(5))))
    assert c.params == [("o", outer), ("xs", Array(Scalar(2), 3)), ("s", codec.string_layout(4))]
    assert [g.width for g in c.circuit.inputs] == [s.width for name, lay in c.params
                                                   for _, s, _ in codec.leaves(lay, name)]


def test_layout_dumps_are_stable():
    from make_golden import render_layouts
    assert render_layouts() == (GOLDEN / "layouts.txt").read_text()
