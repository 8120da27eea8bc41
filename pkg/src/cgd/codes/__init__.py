"""Compression codes and their projections."""

from .base import CompressionCode, IdentityCode, code_project, enumerate_codebook
from .bits import HEADER_BITS, BitReader, BitStream, BitWriter
from .external import ExternalCodec, ExternalCodecSpec, external_project
from .poly import (
    PiecewisePolyCode,
    PiecewisePolyParams,
    poly_bits_for_gamma,
    poly_decode,
    poly_encode,
    poly_rate_report,
    quantize_coefficients,
)
from .sparse import (
    SparseQuantCode,
    SparseQuantParams,
    bits_for_gamma,
    gamma_for_bits,
    sparse_decode,
    sparse_encode,
    sparse_rate_report,
)

__all__ = [
    "HEADER_BITS",
    "BitReader",
    "BitStream",
    "BitWriter",
    "CompressionCode",
    "ExternalCodec",
    "ExternalCodecSpec",
    "IdentityCode",
    "PiecewisePolyCode",
    "PiecewisePolyParams",
    "SparseQuantCode",
    "SparseQuantParams",
    "bits_for_gamma",
    "code_project",
    "enumerate_codebook",
    "external_project",
    "gamma_for_bits",
    "poly_bits_for_gamma",
    "poly_decode",
    "poly_encode",
    "poly_rate_report",
    "quantize_coefficients",
    "sparse_decode",
    "sparse_encode",
    "sparse_rate_report",
]
