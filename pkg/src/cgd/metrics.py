"""Signal container, seeded randomness and reconstruction-quality metrics.

Signals are plain one-dimensional ``float64`` NumPy arrays.  :func:`as_signal`
validates an array-like and returns a read-only view so that a signal cannot be
modified after construction.

All decibel quantities use base-10 logarithms and a fixed grayscale peak of
:data:`PEAK_VALUE`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError, DomainError

__all__ = [
    "PEAK_VALUE",
    "RNG_ALGORITHM",
    "QualityReport",
    "SeededRng",
    "as_signal",
    "derive_seed",
    "measurement_snr",
    "mse",
    "normalized_error",
    "psnr",
    "quality_report",
]

PEAK_VALUE = 255.0
RNG_ALGORITHM = "numpy-pcg64-seedsequence"

_U64 = (1 << 64) - 1


def as_signal(values, n=None):
    """Validate ``values`` as a signal and return it as a read-only array.

    Parameters
    ----------
    values : array_like
        One-dimensional sequence of finite reals.
    n : int, optional
        Required length.

    Returns
    -------
    numpy.ndarray
        ``float64`` array with ``writeable`` cleared.
    """
    x = np.array(values, dtype=np.float64, copy=True)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError(f"signal must be a non-empty 1-D array, got shape {x.shape}")
    if n is not None and x.size != n:
        raise DimensionError(f"expected length {n}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("signal entries must be finite")
    x.flags.writeable = False
    return x


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    return x, y


def mse(x, xhat):
    """Mean squared error ``(1/n) * sum((x - xhat)**2)``."""
    x, xhat = _pair(x, xhat)
    d = x - xhat
    return float(np.dot(d, d) / d.size)


def psnr(mse_value):
    """Peak signal-to-noise ratio in dB for a given MSE; ``inf`` when MSE is 0."""
    if not mse_value >= 0:
        raise DomainError(f"mse must be nonnegative, got {mse_value}")
    if mse_value == 0:
        return float("inf")
    return float(20.0 * np.log10(PEAK_VALUE / np.sqrt(mse_value)))


def measurement_snr(clean, noise):
    """Measurement SNR ``20*log10(||clean|| / ||noise||)`` in dB."""
    clean, noise = _pair(clean, noise)
    nc = float(np.linalg.norm(clean))
    nz = float(np.linalg.norm(noise))
    if nz == 0:
        if nc == 0:
            raise DegenerateInputError("both clean and noise vectors are zero")
        return float("inf")
    if nc == 0:
        return float("-inf")
    return float(20.0 * np.log10(nc / nz))


def normalized_error(x, ref):
    """``||x - ref||_2 / sqrt(n)``."""
    x, ref = _pair(x, ref)
    return float(np.linalg.norm(x - ref) / np.sqrt(x.size))


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float
    snr_db: float
    normalized_error: float

    def as_dict(self):
        return {
            "mse": self.mse,
            "psnr_db": self.psnr_db,
            "snr_db": self.snr_db,
            "normalized_error": self.normalized_error,
        }


def quality_report(x, xhat, snr_db=float("inf")):
    """Bundle the reconstruction metrics of ``xhat`` against ground truth ``x``.

    ``snr_db`` is the measurement SNR of the experiment and is only echoed.
    """
    e = mse(x, xhat)
    return QualityReport(
        mse=e,
        psnr_db=psnr(e),
        snr_db=float(snr_db),
        normalized_error=normalized_error(xhat, x),
    )


def derive_seed(master, *keys):
    """Deterministic 64-bit child seed of ``master`` for the path ``keys``.

    Child seeds are produced with :class:`numpy.random.SeedSequence` spawn
    keys, so distinct key paths give statistically independent streams.
    """
    ss = np.random.SeedSequence(int(master) & _U64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SeededRng:
    """A reproducible random stream identified by ``(seed, algorithm)``.

    Each call to :meth:`generator` restarts the stream from the beginning;
    workers never share a generator and instead call :meth:`child`.
    """

    seed: int
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _U64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.algorithm != RNG_ALGORITHM:
            raise DomainError(f"unsupported RNG algorithm {self.algorithm!r}")

    def generator(self):
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed))))

    def child(self, *keys):
        return SeededRng(derive_seed(self.seed, *keys), self.algorithm)
