import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgd.codes import IdentityCode, SparseQuantCode, enumerate_codebook
from cgd.errors import DimensionError, DomainError, SizeError
from cgd.operators import LinearOperator, sample_operator
from cgd.solver import CGDConfig, TRACE_HEADER, adaptive_step, cgd_run, cgd_step, csp_exhaustive


def dense(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    m, n = matrix.shape
    return LinearOperator("gaussian-unit", m, n, 1.0, 0, _matrix=matrix)


def sparse_signal(rng, n, k):
    x = np.zeros(n)
    x[rng.choice(n, k, replace=False)] = rng.uniform(-1, 1, k)
    return x


class TestStep:
    def test_identity_measurements(self):
        code = SparseQuantCode.create(4, 1, 2)
        y = np.array([0.3, -0.9, 0.1, 0.0])
        out = cgd_step(np.zeros(4), y, dense(np.eye(4)), 1.0, code)
        assert out.tolist() == [0.0, -0.875, 0.0, 0.0]
        assert np.array_equal(out, code.project(y))

    def test_fixed_point(self):
        code = SparseQuantCode.create(16, 2, 4)
        op = sample_operator("gaussian-unit", 10, 16, seed=2)
        x = code.project(sparse_signal(np.random.default_rng(2), 16, 2))
        assert np.array_equal(cgd_step(x, op.apply(x), op, 0.1, code), x)

    def test_rejects_bad_step(self):
        with pytest.raises(DomainError):
            cgd_step(np.zeros(2), np.zeros(2), dense(np.eye(2)), 0.0, IdentityCode(2))


class TestAdaptive:
    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_quadratic_minimiser(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 12, 8
        op = sample_operator("gaussian-unit", m, n, seed=seed)
        x = rng.normal(size=n)
        y = rng.normal(size=m)
        res = y - op.apply(x)
        g = op.adjoint(res)
        Ag = op.apply(g)
        eta_star = float(Ag @ res / (Ag @ Ag))
        eta = adaptive_step(x, y, op, IdentityCode(n), op.default_step, K2_max=25)
        assert eta == pytest.approx(eta_star, rel=1e-3)

    def test_flat_landscape(self):
        op = dense(np.eye(3))
        x = np.array([0.1, 0.2, 0.3])
        assert adaptive_step(x, x, op, IdentityCode(3), 0.7) == 0.7

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_never_worse_than_start(self, seed):
        rng = np.random.default_rng(seed)
        n = 32
        op = sample_operator("gaussian-over-n", 16, n, seed=seed)
        code = SparseQuantCode.create(n, 3, 5)
        y = op.apply(sparse_signal(rng, n, 3))
        x = code.project(rng.normal(size=n) * 0.1)
        eta0 = op.default_step

        def loss(eta):
            return np.linalg.norm(y - op.apply(cgd_step(x, y, op, eta, code)))

        assert loss(adaptive_step(x, y, op, code, eta0)) <= loss(eta0)


class TestRun:
    def test_starts_at_codeword_stops_at_once(self):
        n = 16
        code = SparseQuantCode.create(n, 2, 4)
        op = sample_operator("gaussian-unit", 12, n, seed=4)
        x = code.project(sparse_signal(np.random.default_rng(4), n, 2))
        r = cgd_run(op.apply(x), op, code, CGDConfig(), x0=x)
        assert r.trace.iterations == 1
        assert r.trace.norm_change[1] == 0.0
        assert r.trace.stop_reason == "threshold"
        assert np.array_equal(r.x_hat, x)

    def test_oversampled_reaches_floor(self):
        n, k, b, m = 32, 1, 3, 800
        code = SparseQuantCode.create(n, k, b)
        rng = np.random.default_rng(7)
        x = sparse_signal(rng, n, k)
        op = sample_operator("gaussian-unit", m, n, seed=7)
        r = cgd_run(op.apply(x), op, code, CGDConfig(step_mode="fixed"), ground_truth=x)
        assert r.trace.ref_err_tilde[-1] <= 2.0**-b * math.sqrt(k) / math.sqrt(n)

    def test_trace_invariants_and_csv(self):
        n = 64
        code = SparseQuantCode.create(n, 3, 6)
        op = sample_operator("gaussian-over-n", 40, n, seed=9)
        x = sparse_signal(np.random.default_rng(9), n, 3)
        cfg = CGDConfig(K1_max=5)
        r = cgd_run(op.apply(x), op, code, cfg, ground_truth=x)
        t = r.trace
        assert len(t) <= cfg.K1_max + 1
        assert (t.stop_reason == "threshold") == (t.norm_change[-1] < cfg.eps_T)
        for k in range(1, len(t)):
            assert t.residual[k] <= t.residual_at_init[k]
        assert code.encode(code.decode(code.encode(r.x_hat))) == code.encode(r.x_hat)
        assert code.project(r.x_hat).tobytes() == r.x_hat.tobytes()
        lines = t.to_csv().splitlines()
        assert lines[0] == ",".join(TRACE_HEADER)
        assert len(lines) == len(t) + 1
        assert lines[1] == "0,,{!r},,{!r},{!r}".format(t.residual[0], t.ref_err_tilde[0], t.ref_err_x[0])
        assert r.quality is not None

    def test_no_truth_leaves_blank_columns(self):
        op = sample_operator("gaussian-unit", 6, 8, seed=1)
        r = cgd_run(np.ones(6), op, SparseQuantCode.create(8, 1, 3), CGDConfig(K1_max=2))
        assert r.trace.to_csv().splitlines()[1].endswith(",,")
        assert r.quality is None

    def test_deterministic(self):
        op = sample_operator("rademacher", 20, 32, seed=3)
        y = op.apply(sparse_signal(np.random.default_rng(3), 32, 2))
        code = SparseQuantCode.create(32, 2, 5)
        a = cgd_run(y, op, code).trace.to_csv()
        assert a == cgd_run(y, op, code).trace.to_csv()

    def test_adjoint_start(self):
        op = dense(np.eye(4))
        code = SparseQuantCode.create(4, 1, 2)
        y = np.array([0.3, -0.9, 0.1, 0.0])
        r = cgd_run(y, op, code, CGDConfig(x0_mode="adjoint", step_mode="fixed", eta=1.0))
        assert r.x_hat.tolist() == [0.0, -0.875, 0.0, 0.0]

    def test_dimension_errors(self):
        op = sample_operator("gaussian-unit", 4, 8)
        with pytest.raises(DimensionError):
            cgd_run(np.zeros(5), op, SparseQuantCode.create(8, 1, 3))
        with pytest.raises(DimensionError):
            cgd_run(np.zeros(4), op, SparseQuantCode.create(6, 1, 3))

    def test_config_validation(self):
        for bad in ({"K1_max": 0}, {"eps_T": 0}, {"eta": -1.0}, {"step_mode": "line"}, {"x0_mode": "rand"}):
            with pytest.raises(DomainError):
                CGDConfig(**bad)


class TestCsp:
    def test_three_word_example(self):
        book = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        x, res = csp_exhaustive([0.9, 0.1], dense(np.eye(2)), book)
        assert x.tolist() == [1.0, 0.0]
        assert res**2 == pytest.approx(0.02)

    def test_noiseless_codeword(self):
        code = SparseQuantCode.create(6, 1, 2)
        book = enumerate_codebook(code)
        op = sample_operator("gaussian-unit", 4, 6, seed=5)
        c = book[7]
        x, res = csp_exhaustive(op.apply(c), op, book)
        assert res == pytest.approx(0.0, abs=1e-12)

    def test_dominates_cgd_identity(self):
        code = SparseQuantCode.create(8, 1, 2)
        book = enumerate_codebook(code)
        op = dense(np.eye(8))
        rng = np.random.default_rng(6)
        for _ in range(10):
            y = rng.uniform(-1, 1, 8)
            _, res = csp_exhaustive(y, op, book)
            assert res <= cgd_run(y, op, code).trace.residual[-1]

    def test_guard(self):
        with pytest.raises(SizeError):
            csp_exhaustive([0.0], dense([[1.0]]), [np.zeros(1)] * 3, guard=2)
        with pytest.raises(SizeError):
            csp_exhaustive([0.0], dense([[1.0]]), [])


def test_csp_residual_uses_operator_arithmetic():
    code = SparseQuantCode.create(8, 1, 2)
    book = enumerate_codebook(code)
    rng = np.random.default_rng(13)
    for seed in range(30):
        op = sample_operator("gaussian-unit", 4, 8, seed=seed)
        y = op.apply(sparse_signal(rng, 8, 1))
        x, res = csp_exhaustive(y, op, book)
        assert res == float(np.linalg.norm(y - op.apply(x)))
        assert res <= cgd_run(y, op, code).trace.residual[-1]
