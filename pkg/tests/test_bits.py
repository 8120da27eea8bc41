import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgd.codes import BitReader, BitStream, BitWriter, IdentityCode, enumerate_codebook
from cgd.codes.bits import read_header, write_header
from cgd.errors import DecodeError, SizeError


@given(st.lists(st.tuples(st.integers(0, 24), st.integers(0, 2**24 - 1)), max_size=30))
def test_fields_round_trip(fields):
    fields = [(w, v & ((1 << w) - 1)) for w, v in fields]
    w = BitWriter()
    for width, value in fields:
        w.write(value, width)
    stream = w.finish()
    assert len(stream) == sum(width for width, _ in fields)
    r = BitReader(stream)
    assert [r.read(width) for width, _ in fields] == [v for _, v in fields]
    assert r.remaining == 0


def test_msb_first_layout():
    w = BitWriter()
    w.write(0b101, 3)
    w.write(1, 1)
    s = w.finish()
    assert s.bits() == "1011"
    assert s.data == bytes([0b10110000])
    assert BitStream.from_bits("1011") == s


def test_overflow_and_underrun():
    with pytest.raises(ValueError):
        BitWriter().write(4, 2)
    r = BitReader(BitStream.from_bits("101"))
    with pytest.raises(DecodeError):
        r.read(4)
    with pytest.raises(DecodeError):
        BitReader(BitStream(b"\x00\x00", 3))


def test_header_mismatch():
    w = BitWriter()
    write_header(w, 1, 1)
    with pytest.raises(DecodeError):
        read_header(BitReader(w.finish()), 2, 1)


def test_identity_code():
    code = IdentityCode(3)
    x = np.array([0.1, -2.5, 1e300])
    assert np.array_equal(code.decode(code.encode(x)), x)
    assert np.array_equal(code.project(x), x)
    assert len(code.encode(x)) == 16 + code.rate_bits
    with pytest.raises(DecodeError):
        code.decode(BitStream(b"\x00" * 26, 208))


def test_enumeration_guard():
    with pytest.raises(SizeError):
        enumerate_codebook(IdentityCode(1))
