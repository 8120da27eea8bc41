import os
import sys

import numpy as np
import pytest

from cgd.codes import ExternalCodec, ExternalCodecSpec, external_project
from cgd.errors import CodecAdapterError, DomainError

COPY = "cp {in} {out}"


@pytest.fixture(autouse=True)
def tmp_codec_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CGD_TMPDIR", str(tmp_path))
    return tmp_path


def test_identity_round_trip(tmp_codec_dir):
    x = np.random.default_rng(0).normal(size=17)
    y = external_project(x, ExternalCodecSpec(COPY, COPY))
    assert np.array_equal(x, y)
    # workspace removed on success
    assert os.listdir(tmp_codec_dir) == []


def test_pgm_rounding_bound():
    x = np.random.default_rng(1).uniform(0, 1, 24)
    spec = ExternalCodecSpec(COPY, COPY, fmt="pgm", pgm_scale=255.0, pgm_shape=(4, 6))
    y = external_project(x, spec)
    assert y.size == x.size
    assert np.max(np.abs(x - y)) * 255 <= 0.5 + 1e-12


def test_codec_view():
    code = ExternalCodec(5, ExternalCodecSpec(COPY, COPY))
    x = np.arange(5.0)
    s = code.encode(x)
    assert code.rate_bits == len(s) > 0
    assert np.array_equal(code.decode(s), x)
    assert np.array_equal(code.project(x), x)
    assert code.distortion_bound == float("inf")


def test_nonzero_exit_keeps_workspace(tmp_codec_dir):
    with pytest.raises(CodecAdapterError) as info:
        external_project(np.zeros(3), ExternalCodecSpec("echo oops >&2; exit 7", COPY))
    d = info.value.diagnostics
    assert d["returncode"] == 7 and "oops" in d["stderr"]
    assert os.path.isdir(d["workdir"])


def test_timeout():
    spec = ExternalCodecSpec(f"{sys.executable} -c 'import time; time.sleep(5)'", COPY, timeout=0.3)
    with pytest.raises(CodecAdapterError, match="timed out"):
        external_project(np.zeros(3), spec)


def test_length_mismatch():
    shorter = f"{sys.executable} -c 'import sys; from cgd.io import write_f64v; write_f64v(sys.argv[1], [0.0, 1.0])' {{out}}"
    with pytest.raises(CodecAdapterError, match="returned 2 values"):
        external_project(np.zeros(4), ExternalCodecSpec(COPY, shorter))


def test_truncated_output_is_reported():
    truncate = "head -c 16 {in} > {out}"
    with pytest.raises(CodecAdapterError, match="unreadable"):
        external_project(np.zeros(4), ExternalCodecSpec(COPY, truncate))


def test_missing_output():
    with pytest.raises(CodecAdapterError, match="did not create"):
        external_project(np.zeros(2), ExternalCodecSpec("true", COPY))


def test_spec_validation():
    with pytest.raises(DomainError):
        ExternalCodecSpec(COPY, COPY, fmt="png")
    with pytest.raises(DomainError):
        ExternalCodecSpec(COPY, COPY, timeout=0)
