"""Compression-based gradient descent for compressed sensing.

Recover a signal from ``y = A x + z`` by alternating a gradient step on the
measurement residual with a projection onto the codebook of a compression
code.
"""

from .codes import (
    CompressionCode,
    ExternalCodec,
    ExternalCodecSpec,
    IdentityCode,
    PiecewisePolyCode,
    PiecewisePolyParams,
    SparseQuantCode,
    SparseQuantParams,
    code_project,
    enumerate_codebook,
)
from .errors import (
    CGDError,
    CodecAdapterError,
    ConfigError,
    DecodeError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    SizeError,
)
from .metrics import (
    PEAK_VALUE,
    QualityReport,
    SeededRng,
    as_signal,
    derive_seed,
    measurement_snr,
    mse,
    normalized_error,
    psnr,
    quality_report,
)
from .operators import LinearOperator, NoiseSpec, add_noise_at_snr, sample_operator, spectral_norm
from .polyfit import Segmentation, brute_force_segmentation, segment_error, viterbi_segmentation
from .solver import CGDConfig, CGDResult, SolverTrace, adaptive_step, cgd_run, cgd_step, csp_exhaustive
from .theory import BoundReport, eval_fstar, mu_coefficient, tail_check

__version__ = "0.1.0"
