"""Raw ``.f64v`` vectors and 8-bit binary PGM images.

``.f64v`` layout: an 8-byte little-endian unsigned element count followed by
that many little-endian IEEE-754 doubles.
"""

import os
import struct

import numpy as np

from .errors import DecodeError, DimensionError
from .metrics import as_signal

__all__ = ["read_f64v", "write_f64v", "read_pgm", "write_pgm", "read_signal"]


def write_f64v(path, x):
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.ndim != 1:
        raise DimensionError("f64v files hold 1-D vectors")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", x.size))
        fh.write(x.tobytes())


def read_f64v(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise DecodeError(f"{path}: truncated f64v header")
    (n,) = struct.unpack_from("<Q", data)
    if len(data) != 8 + 8 * n:
        raise DecodeError(f"{path}: header says {n} values, payload has {(len(data) - 8) / 8:g}")
    return as_signal(np.frombuffer(data, dtype="<f8", offset=8, count=n))


def write_pgm(path, values, shape=None):
    """Write ``values`` as a P5 image; entries are clipped and rounded to 0..255.

    ``shape`` is ``(rows, cols)``; the default is a single row.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    rows, cols = shape if shape is not None else (1, v.size)
    if rows * cols != v.size:
        raise DimensionError(f"shape {rows}x{cols} does not hold {v.size} values")
    pix = np.clip(np.rint(v), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (cols, rows))
        fh.write(pix.tobytes())


def _pgm_tokens(data, count):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DecodeError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path):
    """Read a P5 image and return ``(values, (rows, cols))``, row-major, 0..255."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    if magic != b"P5":
        raise DecodeError(f"{path}: not a binary PGM")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise DecodeError(f"{path}: only 8-bit PGM is supported (maxval={maxval})")
    pix = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if pix.size != w * h:
        raise DecodeError(f"{path}: expected {w * h} pixels, found {pix.size}")
    return as_signal(pix.astype(np.float64)), (h, w)


def read_signal(path):
    """Load a signal from ``.f64v`` or ``.pgm`` based on the file extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".pgm":
        return read_pgm(path)[0]
    return read_f64v(path)
