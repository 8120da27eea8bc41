"""Adapter around an external compressor run as a subprocess.

Each command template may use ``{in}`` and ``{out}`` placeholders, which are
replaced by quoted temporary file paths.  The encode command turns the
exchange file into a compressed file; the decode command turns that back
into an exchange file.  Temporary files live under ``$CGD_TMPDIR`` (or the
system default) and are removed when the round trip succeeds; on failure
they are kept and their location is reported in the error diagnostics.
"""

import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from ..errors import CodecAdapterError, DecodeError, DomainError
from ..io import read_f64v, read_pgm, write_f64v, write_pgm
from ..metrics import as_signal
from .base import CompressionCode
from .bits import BitStream

__all__ = ["ExternalCodec", "ExternalCodecSpec", "external_project"]

FORMATS = ("f64v", "pgm")


@dataclass(frozen=True)
class ExternalCodecSpec:
    """How to call an external codec.

    ``pgm_scale`` multiplies the signal before it is written as 8-bit pixels
    and divides it afterwards; ``pgm_shape`` is ``(rows, cols)``, by default
    a single row.
    """

    encode_cmd: str
    decode_cmd: str
    fmt: str = "f64v"
    timeout: float = 60.0
    pgm_scale: float = 1.0
    pgm_shape: tuple = None
    tmpdir: str = None

    def __post_init__(self):
        if self.fmt not in FORMATS:
            raise DomainError(f"exchange format must be one of {FORMATS}, got {self.fmt!r}")
        if not self.timeout > 0 or not self.pgm_scale > 0:
            raise DomainError("timeout and pgm_scale must be positive")

    @property
    def suffix(self):
        return "." + self.fmt


def _tmp_root(spec):
    return spec.tmpdir or os.environ.get("CGD_TMPDIR") or None


def _run(template, src, dst, spec, workdir):
    cmd = template.format(**{"in": shlex.quote(src), "out": shlex.quote(dst)})
    try:
        proc = subprocess.run(
            cmd, shell=True, capture_output=True, text=True, timeout=spec.timeout, cwd=workdir
        )
    except subprocess.TimeoutExpired as exc:
        raise CodecAdapterError(
            f"codec command timed out after {spec.timeout}s",
            {"command": cmd, "stderr": exc.stderr, "workdir": workdir},
        ) from None
    if proc.returncode != 0:
        raise CodecAdapterError(
            f"codec command exited with status {proc.returncode}",
            {"command": cmd, "returncode": proc.returncode, "stdout": proc.stdout,
             "stderr": proc.stderr, "workdir": workdir},
        )
    if not os.path.exists(dst):
        raise CodecAdapterError(f"codec command did not create {dst}", {"command": cmd, "workdir": workdir})


def _write(path, x, spec):
    if spec.fmt == "f64v":
        write_f64v(path, x)
    else:
        write_pgm(path, np.asarray(x) * spec.pgm_scale, spec.pgm_shape)


def _read(path, spec):
    if spec.fmt == "f64v":
        return read_f64v(path)
    values, _ = read_pgm(path)
    return as_signal(values / spec.pgm_scale)


class _Workspace:
    """Temporary directory kept only when something goes wrong."""

    def __init__(self, spec):
        self.path = tempfile.mkdtemp(prefix="cgd-codec-", dir=_tmp_root(spec))

    def __enter__(self):
        return self.path

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            shutil.rmtree(self.path, ignore_errors=True)
        elif isinstance(exc, CodecAdapterError):
            exc.diagnostics.setdefault("workdir", self.path)
        return False


def external_project(x, spec):
    """Round-trip ``x`` through the external codec.

    Raises
    ------
    CodecAdapterError
        On a nonzero exit, a timeout, an unreadable output or a length change.
    """
    x = as_signal(x)
    with _Workspace(spec) as wd:
        src = os.path.join(wd, "input" + spec.suffix)
        packed = os.path.join(wd, "packed.bin")
        dst = os.path.join(wd, "output" + spec.suffix)
        _write(src, x, spec)
        _run(spec.encode_cmd, src, packed, spec, wd)
        _run(spec.decode_cmd, packed, dst, spec, wd)
        try:
            y = _read(dst, spec)
        except DecodeError as exc:
            raise CodecAdapterError(f"unreadable codec output: {exc}", {"workdir": wd}) from None
        if y.size != x.size:
            raise CodecAdapterError(
                f"codec returned {y.size} values for an input of {x.size}",
                {"workdir": wd, "expected": x.size, "got": y.size},
            )
    return y


class ExternalCodec(CompressionCode):
    """:class:`CompressionCode` view of an external codec.

    The bit stream is the compressed file's bytes.  Rate and distortion are
    not known in advance: ``rate_bits`` is the size of the last stream
    produced and ``distortion_bound`` is infinite.
    """

    def __init__(self, n, spec):
        self.n = int(n)
        self.spec = spec
        self._last_bits = 0

    @property
    def rate_bits(self):
        return self._last_bits

    @property
    def distortion_bound(self):
        return float("inf")

    def encode(self, x):
        x = as_signal(x, self.n)
        with _Workspace(self.spec) as wd:
            src = os.path.join(wd, "input" + self.spec.suffix)
            packed = os.path.join(wd, "packed.bin")
            _write(src, x, self.spec)
            _run(self.spec.encode_cmd, src, packed, self.spec, wd)
            with open(packed, "rb") as fh:
                data = fh.read()
        self._last_bits = 8 * len(data)
        return BitStream(data, 8 * len(data))

    def decode(self, bits):
        with _Workspace(self.spec) as wd:
            packed = os.path.join(wd, "packed.bin")
            dst = os.path.join(wd, "output" + self.spec.suffix)
            with open(packed, "wb") as fh:
                fh.write(bits.data)
            _run(self.spec.decode_cmd, packed, dst, self.spec, wd)
            try:
                y = _read(dst, self.spec)
            except DecodeError as exc:
                raise CodecAdapterError(f"unreadable codec output: {exc}", {"workdir": wd}) from None
        if y.size != self.n:
            raise CodecAdapterError(f"codec returned {y.size} values, expected {self.n}", {})
        return y

    def project(self, x):
        return external_project(as_signal(x, self.n), self.spec)

    def describe(self):
        return {"kind": "external", "n": self.n, "fmt": self.spec.fmt,
                "encode_cmd": self.spec.encode_cmd, "decode_cmd": self.spec.decode_cmd}
