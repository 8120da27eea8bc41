import numpy as np
import pytest
import scipy.fft

from cgd.errors import DegenerateInputError, DimensionError, DomainError
from cgd.metrics import measurement_snr
from cgd.operators import (
    KINDS,
    LinearOperator,
    NoiseSpec,
    add_noise_at_snr,
    sample_operator,
    spectral_norm,
    subgaussian_constant,
)


@pytest.mark.parametrize("kind", KINDS)
def test_adjoint_identity(kind):
    op = sample_operator(kind, 24, 40, sigma_a=1.3, seed=5)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.standard_normal(40), rng.standard_normal(24)
        assert abs(op.apply(x) @ y - x @ op.adjoint(y)) <= 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_matrix_matches_apply(kind):
    op = sample_operator(kind, 10, 16, seed=3)
    x = np.random.default_rng(1).standard_normal(16)
    assert np.allclose(op.matrix() @ x, op.apply(x), atol=1e-12)


def test_partial_dct_rows_orthonormal():
    op = sample_operator("partial-dct", 20, 64, seed=9)
    A = op.matrix()
    assert np.abs(A @ A.T - np.eye(20)).max() <= 1e-10
    assert len(set(op.row_index_set)) == 20
    assert list(op.row_index_set) == sorted(op.row_index_set)


def test_partial_dct_matches_scipy_matrix():
    op = sample_operator("partial-dct", 5, 8, seed=2)
    full = scipy.fft.dct(np.eye(8), type=2, norm="ortho", axis=0)
    assert np.allclose(op.matrix(), full[list(op.row_index_set)])


def test_entry_statistics():
    m, n = 400, 300
    g = sample_operator("gaussian-unit", m, n, sigma_a=2.0, seed=1).matrix()
    assert g.var() == pytest.approx(4.0, rel=0.02)
    g = sample_operator("gaussian-over-n", m, n, sigma_a=2.0, seed=1).matrix()
    assert g.var() == pytest.approx(4.0 / n, rel=0.02)
    r = sample_operator("rademacher", m, n, sigma_a=0.5, seed=1).matrix()
    assert set(np.unique(r)) == {-0.5, 0.5}


def test_determinism_and_record_round_trip():
    a = sample_operator("gaussian-unit", 6, 9, seed=11)
    b = sample_operator("gaussian-unit", 6, 9, seed=11)
    assert np.array_equal(a.matrix(), b.matrix())
    c = LinearOperator.from_record(a.to_record())
    assert np.array_equal(a.matrix(), c.matrix())
    d = sample_operator("partial-dct", 4, 9, seed=11)
    assert LinearOperator.from_record(d.to_record()).row_index_set == d.row_index_set


def test_record_mismatch_detected():
    rec = sample_operator("partial-dct", 4, 9, seed=11).to_record()
    rec["row_index_set"] = [0, 1, 2, 3] if rec["row_index_set"] != [0, 1, 2, 3] else [1, 2, 3, 4]
    with pytest.raises(DegenerateInputError):
        LinearOperator.from_record(rec)


def test_errors():
    with pytest.raises(DimensionError):
        sample_operator("partial-dct", 10, 8)
    with pytest.raises(DomainError):
        sample_operator("bernoulli", 2, 2)
    with pytest.raises(DomainError):
        sample_operator("gaussian-unit", 2, 2, sigma_a=0)
    op = sample_operator("gaussian-unit", 3, 4)
    with pytest.raises(DimensionError):
        op.apply(np.zeros(3))
    with pytest.raises(DimensionError):
        op.adjoint(np.zeros(4))


def test_default_steps():
    assert sample_operator("gaussian-unit", 10, 20, sigma_a=2.0).default_step == pytest.approx(1 / 40)
    assert sample_operator("gaussian-over-n", 10, 20, sigma_a=2.0).default_step == pytest.approx(20 / 40)
    assert sample_operator("partial-dct", 10, 20).default_step == 1.0


@pytest.mark.parametrize("kind", ["gaussian-unit", "rademacher", "partial-dct"])
def test_spectral_norm_against_svd(kind):
    op = sample_operator(kind, 20, 50, seed=4)
    res = spectral_norm(op)
    exact = np.linalg.norm(op.matrix(), 2)
    assert res.converged
    assert res.sigma == pytest.approx(exact, rel=1e-6)
    assert res.sigma <= exact * (1 + 1e-12)


def test_subgaussian_constant():
    K = subgaussian_constant(1.0)
    # E exp(X^2 / K^2) = 2 for X = +-1
    assert np.exp(1.0 / K**2) == pytest.approx(2.0)


@pytest.mark.parametrize("snr", [0.0, 10.0, 20.0, 33.3])
def test_noise_hits_requested_snr(snr):
    clean = np.random.default_rng(3).standard_normal(50)
    y, c = add_noise_at_snr(clean, NoiseSpec(snr, seed=8))
    assert c > 0
    assert measurement_snr(clean, y - clean) == pytest.approx(snr, abs=1e-9)


def test_noiseless_and_degenerate():
    y, c = add_noise_at_snr(np.ones(3), NoiseSpec())
    assert c == 0.0 and np.array_equal(y, np.ones(3))
    with pytest.raises(DegenerateInputError):
        add_noise_at_snr(np.zeros(3), NoiseSpec(10.0))
