import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from cgd.errors import DimensionError, SizeError
from cgd.polyfit import (
    brute_force_segmentation,
    monomial_basis,
    segment_error,
    viterbi_segmentation,
)


def slsqp_fit(x, i1, i2, N):
    """Independent constrained fit used as a reference."""
    n = len(x)
    V = monomial_basis(n, N)[i1 : i2 + 1]
    seg = np.asarray(x[i1 : i2 + 1])
    best = np.inf
    for start in [np.zeros(N + 1), np.full(N + 1, 1.0 / (N + 2))]:
        res = minimize(
            lambda a: float(np.sum((seg - V @ a) ** 2)),
            start,
            jac=lambda a: -2 * V.T @ (seg - V @ a),
            bounds=[(0, 1)] * (N + 1),
            constraints=[{"type": "ineq", "fun": lambda a: 1 - np.sum(a), "jac": lambda a: -np.ones(N + 1)}],
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 500},
        )
        best = min(best, res.fun)
    return best


class TestSegmentError:
    def test_constant_segment(self):
        a, e = segment_error([0.5] * 5, 0, 4, 0)
        assert a.tolist() == pytest.approx([0.5])
        assert e == pytest.approx(0.0, abs=1e-20)

    def test_step_as_one_segment(self):
        a, e = segment_error([0, 0, 0, 1, 1, 1], 0, 5, 0)
        assert a[0] == pytest.approx(0.5)
        assert e == pytest.approx(1.5)

    def test_two_points_on_feasible_line(self):
        n = 4
        # 0.2 + 0.4 t at t = 1/4, 2/4
        x = np.array([0.0, 0.3, 0.4, 0.0])
        a, e = segment_error(x, 1, 2, 1)
        assert a.tolist() == pytest.approx([0.2, 0.4])
        assert e == pytest.approx(0.0, abs=1e-20)
        assert n == len(x)

    def test_clamped_singletons(self):
        for v, expect in [(-0.4, 0.0), (0.3, 0.3), (1.7, 1.0)]:
            a, e = segment_error([v], 0, 0, 0)
            assert a[0] == pytest.approx(expect)
            assert e == pytest.approx((v - expect) ** 2)

    def test_empty_segment(self):
        with pytest.raises(DimensionError):
            segment_error([1.0, 2.0], 1, 0, 0)

    def test_repeat_is_bitwise_identical(self):
        x = np.random.default_rng(1).normal(size=12)
        a1, e1 = segment_error(x, 2, 9, 2)
        a2, e2 = segment_error(x, 2, 9, 2)
        assert a1.tobytes() == a2.tobytes() and e1 == e2

    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 2))
    def test_matches_generic_solver(self, seed, N):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 16))
        x = rng.uniform(-0.5, 1.5, n)
        i1 = int(rng.integers(0, n))
        i2 = int(rng.integers(i1, n))
        a, e = segment_error(x, i1, i2, N)
        assert np.all(a >= -1e-12) and a.sum() <= 1 + 1e-9
        ref = slsqp_fit(x, i1, i2, min(N, i2 - i1))
        # exact solver is never worse, and agrees with the reference
        assert e <= ref + 1e-9
        assert e == pytest.approx(ref, abs=1e-7)


class TestSegmentation:
    def test_step_split(self):
        x = [0, 0, 0, 1, 1, 1]
        for seg in (viterbi_segmentation(x, 0, 1), brute_force_segmentation(x, 0, 1)):
            assert seg.singularities == (3,)
            assert seg.total_error == pytest.approx(0.0, abs=1e-20)

    def test_no_breakpoints_is_whole_fit(self):
        x = np.random.default_rng(3).uniform(size=9)
        seg = viterbi_segmentation(x, 1, 0)
        _, e = segment_error(x, 0, 8, 1)
        assert seg.singularities == () and seg.total_error == e

    def test_every_point_its_own_segment(self):
        x = np.array([-0.5, 0.2, 1.5, 0.9])
        seg = brute_force_segmentation(x, 0, 3)
        assert seg.total_error == pytest.approx(np.sum((x - np.clip(x, 0, 1)) ** 2))

    def test_exact_member(self):
        n = 40
        t = np.arange(n) / n
        x = np.where(np.arange(n) < 17, 0.1 + 0.6 * t, 0.5 + 0.2 * t)
        seg = viterbi_segmentation(x, 1, 2)
        assert seg.total_error <= 1e-18
        assert np.allclose(seg.evaluate(), x, atol=1e-12)

    def test_structure(self):
        x = np.random.default_rng(5).uniform(size=20)
        seg = viterbi_segmentation(x, 2, 3)
        assert len(seg.singularities) <= 3
        assert list(seg.singularities) == sorted(set(seg.singularities))
        assert all(0 < s < 20 for s in seg.singularities)
        assert sum(hi - lo for lo, hi in seg.segments()) == 20
        assert seg.total_error == pytest.approx(sum(seg.errors))
        for a in seg.coefficients:
            assert min(a) >= -1e-9 and max(a) <= 1 + 1e-9 and sum(a) <= 1 + 1e-9

    def test_guard(self):
        with pytest.raises(SizeError):
            brute_force_segmentation(np.zeros(17), 0, 1)

    def test_ties_pick_fewest_then_smallest(self):
        # a constant signal fits with zero error in every placement
        seg = viterbi_segmentation(np.full(8, 0.25), 0, 2)
        assert seg.singularities == ()
        # errors tie for splits at 2 and at 3: the smaller index wins
        x = [0, 0, 0.5, 1, 1]
        assert viterbi_segmentation(x, 0, 1).singularities == brute_force_segmentation(x, 0, 1).singularities

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 11))
        N = int(rng.integers(0, 2))
        Q = int(rng.integers(0, 3))
        x = rng.uniform(-0.2, 1.2, n)
        v = viterbi_segmentation(x, N, Q)
        b = brute_force_segmentation(x, N, Q)
        assert abs(v.total_error - b.total_error) <= 1e-9

    def test_n10_q2_n1(self):
        x = np.random.default_rng(10).uniform(size=10)
        v = viterbi_segmentation(x, 1, 2)
        b = brute_force_segmentation(x, 1, 2)
        assert v.total_error == pytest.approx(b.total_error, abs=1e-9)

    @settings(max_examples=30)
    @given(arrays(np.float64, st.integers(2, 14), elements=st.floats(-1, 2)))
    def test_monotone_in_q_and_n(self, x):
        grid = {(N, Q): viterbi_segmentation(x, N, Q).total_error for N, Q in itertools.product(range(3), range(4))}
        for N, Q in grid:
            if Q + 1 <= 3:
                assert grid[N, Q + 1] <= grid[N, Q] + 1e-9
            if N + 1 <= 2:
                assert grid[N + 1, Q] <= grid[N, Q] + 1e-9
