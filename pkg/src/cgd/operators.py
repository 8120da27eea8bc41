"""Random measurement ensembles.

Four kinds are supported:

``gaussian-unit``
    i.i.d. ``N(0, sigma_a**2)`` entries.
``gaussian-over-n``
    i.i.d. ``N(0, sigma_a**2 / n)`` entries.
``rademacher``
    i.i.d. ``+-sigma_a`` with equal probability.
``partial-dct``
    ``m`` distinct rows, drawn uniformly without replacement, of the ``n x n``
    orthonormal DCT-II matrix.  ``sigma_a`` is recorded but does not scale the
    rows.

An operator is fully determined by ``(kind, m, n, sigma_a, seed)``; only that
metadata is persisted and the matrix is regenerated on load.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.fft

from .errors import DegenerateInputError, DimensionError, DomainError
from .metrics import SeededRng, derive_seed

__all__ = [
    "KINDS",
    "LinearOperator",
    "NoiseSpec",
    "PowerIterationResult",
    "add_noise_at_snr",
    "sample_operator",
    "spectral_norm",
    "subgaussian_constant",
]

KINDS = ("gaussian-unit", "gaussian-over-n", "rademacher", "partial-dct")

# spawn keys for the independent streams hanging off an operator seed
_MATRIX_KEY = 0
_POWER_START_KEY = 1


@dataclass(frozen=True)
class LinearOperator:
    kind: str
    m: int
    n: int
    sigma_a: float
    seed: int
    row_index_set: tuple = None
    _matrix: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def entry_variance(self):
        """Variance of a single matrix entry."""
        if self.kind == "gaussian-over-n":
            return self.sigma_a**2 / self.n
        if self.kind == "partial-dct":
            return 1.0 / self.n
        return self.sigma_a**2

    @property
    def default_step(self):
        """Fixed C-GD step ``1 / (m * Var(A_ij))``; ``1`` for orthonormal rows."""
        if self.kind == "partial-dct":
            return 1.0
        return 1.0 / (self.m * self.entry_variance)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionError(f"operator expects length {self.n}, got {x.shape}")
        if self.kind == "partial-dct":
            return scipy.fft.dct(x, type=2, norm="ortho")[list(self.row_index_set)]
        return self._matrix @ x

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.m,):
            raise DimensionError(f"adjoint expects length {self.m}, got {y.shape}")
        if self.kind == "partial-dct":
            full = np.zeros(self.n)
            full[list(self.row_index_set)] = y
            return scipy.fft.idct(full, type=2, norm="ortho")
        return self._matrix.T @ y

    def matrix(self):
        """Dense ``m x n`` copy of the operator."""
        if self.kind == "partial-dct":
            return scipy.fft.dct(np.eye(self.n), type=2, norm="ortho", axis=0)[
                list(self.row_index_set)
            ]
        return self._matrix.copy()

    def to_record(self):
        rec = {
            "kind": self.kind,
            "m": self.m,
            "n": self.n,
            "sigma_a": self.sigma_a,
            "seed": self.seed,
        }
        if self.row_index_set is not None:
            rec["row_index_set"] = list(self.row_index_set)
        return rec

    @classmethod
    def from_record(cls, rec):
        op = sample_operator(rec["kind"], rec["m"], rec["n"], rec["sigma_a"], rec["seed"])
        stored = rec.get("row_index_set")
        if stored is not None and tuple(stored) != op.row_index_set:
            raise DegenerateInputError("stored row_index_set does not match the regenerated operator")
        return op


def sample_operator(kind, m, n, sigma_a=1.0, seed=0):
    """Draw a measurement operator; identical arguments give identical operators."""
    if kind not in KINDS:
        raise DomainError(f"unknown operator kind {kind!r}; expected one of {KINDS}")
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise DimensionError(f"operator needs m, n >= 1, got {m}x{n}")
    if not sigma_a > 0:
        raise DomainError(f"sigma_a must be positive, got {sigma_a}")
    sigma_a = float(sigma_a)
    rng = SeededRng(derive_seed(seed, _MATRIX_KEY)).generator()
    if kind == "partial-dct":
        if m > n:
            raise DimensionError(f"cannot select {m} distinct rows from an {n}-point DCT")
        rows = tuple(int(i) for i in np.sort(rng.choice(n, size=m, replace=False)))
        return LinearOperator(kind, m, n, sigma_a, int(seed), rows)
    if kind == "rademacher":
        mat = sigma_a * (2.0 * rng.integers(0, 2, size=(m, n)) - 1.0)
    else:
        scale = sigma_a if kind == "gaussian-unit" else sigma_a / np.sqrt(n)
        mat = scale * rng.standard_normal((m, n))
    mat.flags.writeable = False
    return LinearOperator(kind, m, n, sigma_a, int(seed), None, mat)


def subgaussian_constant(op_or_sigma):
    """psi_2 norm of a ``+-sigma`` Rademacher entry: ``sigma / sqrt(ln 2)``.

    For a constant-magnitude variable ``E exp(X**2 / L**2) = exp(sigma**2 / L**2)``
    equals 2 exactly at ``L = sigma / sqrt(ln 2)``.
    """
    sigma = op_or_sigma.sigma_a if isinstance(op_or_sigma, LinearOperator) else op_or_sigma
    return float(sigma / np.sqrt(np.log(2.0)))


class PowerIterationResult(NamedTuple):
    sigma: float
    converged: bool
    iterations: int


def spectral_norm(op, max_iters=1000, tol=1e-12):
    """Estimate ``sigma_max(A)`` by power iteration on ``A^T A``.

    The start vector is derived from the operator seed, so the estimate is
    reproducible.  The returned value never exceeds the true norm by more
    than rounding.
    """
    if max_iters < 1 or not tol > 0:
        raise DomainError("max_iters must be >= 1 and tol > 0")
    v = SeededRng(derive_seed(op.seed, _POWER_START_KEY)).generator().standard_normal(op.n)
    v /= np.linalg.norm(v)
    sigma = float(np.linalg.norm(op.apply(v)))
    for it in range(1, max_iters + 1):
        w = op.adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return PowerIterationResult(0.0, True, it)
        v = w / nw
        new = float(np.linalg.norm(op.apply(v)))
        if abs(new - sigma) <= tol * max(new, np.finfo(float).tiny):
            return PowerIterationResult(new, True, it)
        sigma = new
    return PowerIterationResult(sigma, False, max_iters)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = float("inf")
    seed: int = 0


def add_noise_at_snr(y_clean, spec):
    """Add white Gaussian noise scaled so the measurement SNR equals ``spec.snr_db``.

    Returns ``(y, c)`` where ``y = y_clean + c * g`` for a standard normal draw
    ``g``; ``c`` is zero in the noiseless case.
    """
    y_clean = np.asarray(y_clean, dtype=np.float64)
    if np.isposinf(spec.snr_db):
        return y_clean.copy(), 0.0
    norm_clean = np.linalg.norm(y_clean)
    if norm_clean == 0:
        raise DegenerateInputError("cannot calibrate noise against a zero measurement vector")
    g = SeededRng(spec.seed).generator().standard_normal(y_clean.size)
    c = norm_clean / (np.linalg.norm(g) * 10.0 ** (spec.snr_db / 20.0))
    return y_clean + c * g, float(c)
