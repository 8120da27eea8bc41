"""Fixed-width bit packing.

Fields are written most-significant bit first.  Every stream produced by a
code starts with a 16-bit header: an 8-bit code-kind tag and an 8-bit format
version.
"""

from dataclasses import dataclass

from ..errors import DecodeError

HEADER_BITS = 16


@dataclass(frozen=True)
class BitStream:
    """Immutable packed bit sequence of ``length`` bits."""

    data: bytes
    length: int

    def __len__(self):
        return self.length

    def bits(self):
        """The stream as a string of ``'0'``/``'1'`` characters."""
        if self.length == 0:
            return ""
        return format(int.from_bytes(self.data, "big"), f"0{8 * len(self.data)}b")[: self.length]

    @classmethod
    def from_bits(cls, text):
        w = BitWriter()
        for ch in text:
            w.write(ch == "1", 1)
        return w.finish()


class BitWriter:
    def __init__(self):
        self._value = 0
        self._length = 0

    def write(self, value, width):
        value = int(value)
        if width < 0 or value < 0 or value >> width:
            raise ValueError(f"value {value} does not fit in {width} bits")
        self._value = (self._value << width) | value
        self._length += width

    def finish(self):
        nbytes = (self._length + 7) // 8
        padded = self._value << (8 * nbytes - self._length)
        return BitStream(padded.to_bytes(nbytes, "big"), self._length)


class BitReader:
    def __init__(self, stream):
        self._value = int.from_bytes(stream.data, "big")
        self._total = 8 * len(stream.data)
        self._length = stream.length
        self._pos = 0
        if not 0 <= self._length <= self._total or self._total - self._length >= 8:
            raise DecodeError("bit stream length disagrees with its byte payload")

    @property
    def remaining(self):
        return self._length - self._pos

    def read(self, width):
        if width > self.remaining:
            raise DecodeError(f"stream ended: wanted {width} bits, {self.remaining} left")
        self._pos += width
        shift = self._total - self._pos
        return (self._value >> shift) & ((1 << width) - 1)


def write_header(writer, tag, version):
    writer.write(tag, 8)
    writer.write(version, 8)


def read_header(reader, tag, version):
    got_tag, got_version = reader.read(8), reader.read(8)
    if (got_tag, got_version) != (tag, version):
        raise DecodeError(
            f"stream header is tag={got_tag} version={got_version}, "
            f"expected tag={tag} version={version}"
        )
