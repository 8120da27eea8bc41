"""The compression-code contract.

A code maps a length-``n`` signal to a :class:`~cgd.codes.bits.BitStream`
and back.  Its projection is ``decode(encode(x))``; the image of the
projection is the codebook.  ``distortion_bound`` is the worst-case round-trip
error on the code's declared domain and ``rate_bits`` the payload size.
"""

import abc

import numpy as np

from ..errors import DecodeError, SizeError
from ..metrics import as_signal
from .bits import HEADER_BITS, BitStream, BitWriter

__all__ = ["CompressionCode", "IdentityCode", "code_project", "enumerate_codebook"]


class CompressionCode(abc.ABC):
    n: int

    @abc.abstractmethod
    def encode(self, x) -> BitStream: ...

    @abc.abstractmethod
    def decode(self, bits: BitStream) -> np.ndarray: ...

    @property
    @abc.abstractmethod
    def rate_bits(self) -> int:
        """Number of payload bits (header excluded)."""

    @property
    @abc.abstractmethod
    def distortion_bound(self) -> float: ...

    def project(self, x):
        return self.decode(self.encode(x))

    def describe(self):
        """Plain-dict summary used in experiment records."""
        return {"kind": type(self).__name__, "n": self.n}


def code_project(code, x):
    """``decode(encode(x))``: the code's projection onto its codebook."""
    return code.project(x)


def enumerate_codebook(code, guard=1 << 20):
    """List every distinct codeword of a fixed-rate code, in stream order.

    All ``2**rate_bits`` payloads are decoded; malformed ones are skipped.
    """
    payload = code.rate_bits
    if payload > 62 or (1 << payload) > guard:
        raise SizeError(f"codebook enumeration needs 2**{payload} decodes, guard is {guard}")
    header = code.encode(np.zeros(code.n)).bits()[:HEADER_BITS]
    seen, words = set(), []
    for value in range(1 << payload):
        w = BitWriter()
        for ch in header:
            w.write(ch == "1", 1)
        w.write(value, payload)
        try:
            word = code.decode(w.finish())
        except DecodeError:
            continue
        key = word.tobytes()
        if key not in seen:
            seen.add(key)
            words.append(word)
    return words


class IdentityCode(CompressionCode):
    """Lossless code storing raw doubles; its projection is the identity."""

    TAG, VERSION = 3, 1

    def __init__(self, n):
        self.n = int(n)

    @property
    def rate_bits(self):
        return 64 * self.n

    @property
    def distortion_bound(self):
        return 0.0

    def encode(self, x):
        x = np.ascontiguousarray(as_signal(x, self.n), dtype=">f8")
        header = bytes([self.TAG, self.VERSION])
        return BitStream(header + x.tobytes(), HEADER_BITS + self.rate_bits)

    def decode(self, bits):
        if bits.length != HEADER_BITS + self.rate_bits or bits.data[:2] != bytes([self.TAG, self.VERSION]):
            raise DecodeError("not an identity-code stream of the expected length")
        return as_signal(np.frombuffer(bits.data[2:], dtype=">f8").astype(np.float64))

    def project(self, x):
        return as_signal(x, self.n)
