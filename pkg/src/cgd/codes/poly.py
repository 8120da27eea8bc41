"""Piecewise-polynomial code.

The encoder segments the signal optimally (see :mod:`cgd.polyfit`) and
stores

    Q breakpoint slots, ceil(log2 n) + 1 bits each (value n marks an unused slot)
    (N+1)(Q+1) coefficient slots, b bits each

Coefficients are quantized on ``[0, 1]`` with ``2**b`` uniform bins and
reconstructed at bin midpoints.  Midpoints of a feasible fit can sum to more
than one; in that case the encoder lowers bins one at a time, always the one
whose reconstruction overshoots most, until the quantized vector is feasible
again.  Slots above a segment's effective degree, and all slots of unused
segments, hold zero and decode to zero.

Neighbouring segments that quantize to the same coefficients are merged,
and the encoder re-encodes its own output until the decoded signal is
stable, so re-encoding a decoded signal gives back the same stream.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DecodeError, DomainError
from ..metrics import as_signal
from ..polyfit import effective_degree, monomial_basis, viterbi_segmentation
from .base import CompressionCode
from .bits import HEADER_BITS, BitReader, BitWriter, read_header, write_header

__all__ = [
    "PiecewisePolyCode",
    "PiecewisePolyParams",
    "PolyRateReport",
    "poly_bits_for_gamma",
    "poly_decode",
    "poly_encode",
    "poly_rate_report",
    "quantize_coefficients",
]

TAG, VERSION = 2, 1
MAX_ROUNDS = 16


def poly_bits_for_gamma(n, N, gamma):
    """``b = ceil((gamma + 1/2) log2 n + log2(N + 1))``."""
    return max(1, math.ceil((gamma + 0.5) * math.log2(n) + math.log2(N + 1)))


@dataclass(frozen=True)
class PiecewisePolyParams:
    n: int
    N: int
    Q: int
    b: int
    gamma: float = None

    def __post_init__(self):
        if self.n < 1 or self.N < 0 or self.Q < 0:
            raise DomainError(f"need n >= 1 and N, Q >= 0, got n={self.n}, N={self.N}, Q={self.Q}")
        if self.b < 1 or (self.N + 1) > 2 ** (self.b + 1):
            raise DomainError(f"b={self.b} bits cannot hold {self.N + 1} feasible coefficients")
        if self.gamma is None:
            g = (self.b - math.log2(self.N + 1)) / math.log2(self.n) - 0.5 if self.n > 1 else 0.0
            object.__setattr__(self, "gamma", g)

    @classmethod
    def from_gamma(cls, n, N, Q, gamma):
        return cls(n, N, Q, poly_bits_for_gamma(n, N, gamma), gamma)

    @property
    def singularity_bits(self):
        return (math.ceil(math.log2(self.n)) if self.n > 1 else 0) + 1

    @property
    def payload_bits(self):
        return self.Q * self.singularity_bits + (self.N + 1) * (self.Q + 1) * self.b

    @property
    def distortion_bound(self):
        """``sqrt(n) (N+1) 2**-b``."""
        return math.sqrt(self.n) * (self.N + 1) * 2.0**-self.b


def quantize_coefficients(a, b):
    """Midpoint bins for a feasible coefficient vector.

    Returns integer bins ``q`` with ``sum((q + 0.5) / 2**b) <= 1``.  The
    starting point is ``floor(a * 2**b)`` capped at ``2**b - 1``; bins are
    then lowered greedily, cheapest first in L1 distance to ``a``.
    """
    a = np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0)
    levels = 1 << b
    q = np.minimum(np.floor(a * levels), levels - 1).astype(np.int64)
    budget = 2 * levels  # sum(2q + 1) <= 2**(b+1)  <=>  sum of midpoints <= 1
    while int(np.sum(2 * q + 1)) > budget:
        recon = (q + 0.5) / levels
        over = np.where(q > 0, recon - a, -np.inf)
        j = int(np.argmax(over))
        if not np.isfinite(over[j]):
            raise DomainError("coefficient vector cannot be made feasible")
        q[j] -= 1
    return q


def _encode_once(x, p):
    seg = viterbi_segmentation(x, p.N, p.Q)
    bounds = seg.bounds
    bins, degrees = [], []
    for (lo, hi), coefs in zip(seg.segments(), seg.coefficients):
        d = effective_degree(hi - lo, p.N)
        q = np.zeros(p.N + 1, dtype=np.int64)
        q[: d + 1] = quantize_coefficients(coefs[: d + 1], p.b)
        bins.append(q)
        degrees.append(d)

    # merge neighbours that quantize identically
    ends, m_bins, m_deg = [bounds[1]], [bins[0]], [degrees[0]]
    for i in range(1, len(bins)):
        lo = ends[-2] if len(ends) > 1 else 0
        hi = bounds[i + 1]
        if (
            m_deg[-1] == degrees[i]
            and np.array_equal(m_bins[-1], bins[i])
            and effective_degree(hi - lo, p.N) == degrees[i]
        ):
            ends[-1] = hi
        else:
            ends.append(hi)
            m_bins.append(bins[i])
            m_deg.append(degrees[i])
    singularities = ends[:-1]

    w = BitWriter()
    write_header(w, TAG, VERSION)
    for slot in range(p.Q):
        w.write(singularities[slot] if slot < len(singularities) else p.n, p.singularity_bits)
    for slot in range(p.Q + 1):
        q = m_bins[slot] if slot < len(m_bins) else np.zeros(p.N + 1, dtype=np.int64)
        for v in q:
            w.write(int(v), p.b)
    return w.finish()


def poly_encode(x, p, max_rounds=MAX_ROUNDS):
    """Encode ``x``, then settle on a stream that reproduces its own decoding.

    Re-fitting a decoded signal can choose a different segmentation, for
    instance merging a short segment into a neighbour that it happens to
    extend exactly.  The encoder therefore repeats decode and encode until
    the decoded signal stops changing and returns that stream; encoding the
    decoded output then reproduces the stream bit for bit.
    """
    x = as_signal(x, p.n)
    stream = _encode_once(x, p)
    current = poly_decode(stream, p)
    for _ in range(max_rounds):
        again = _encode_once(current, p)
        decoded = poly_decode(again, p)
        if decoded.tobytes() == current.tobytes():
            return again
        current = decoded
    return again


def poly_decode(bits, p):
    expected = HEADER_BITS + p.payload_bits
    if bits.length != expected:
        raise DecodeError(f"poly stream has {bits.length} bits, expected {expected}")
    r = BitReader(bits)
    read_header(r, TAG, VERSION)
    raw = [r.read(p.singularity_bits) for _ in range(p.Q)]
    used = [s for s in raw if s != p.n]
    if raw[: len(used)] != used or any(s == 0 or s > p.n for s in used):
        raise DecodeError(f"malformed breakpoint slots {raw}")
    if any(b <= a for a, b in zip(used, used[1:])):
        raise DecodeError(f"breakpoints not increasing: {used}")
    bounds = [0, *used, p.n]

    V = monomial_basis(p.n, p.N)
    out = np.empty(p.n)
    levels = 1 << p.b
    for slot in range(p.Q + 1):
        q = np.array([r.read(p.b) for _ in range(p.N + 1)], dtype=np.int64)
        if slot >= len(bounds) - 1:
            if q.any():
                raise DecodeError("unused segment carries nonzero coefficients")
            continue
        lo, hi = bounds[slot], bounds[slot + 1]
        d = effective_degree(hi - lo, p.N)
        if q[d + 1 :].any():
            raise DecodeError("coefficient above the segment's degree is nonzero")
        a = np.zeros(p.N + 1)
        a[: d + 1] = (q[: d + 1] + 0.5) / levels
        out[lo:hi] = V[lo:hi] @ a
    return as_signal(out)


class PolyRateReport(NamedTuple):
    payload_bits: int
    payload_bound: float
    r_tilde: float


def poly_rate_report(p):
    """Payload size, the budget ``(N+1)(Q+1) b + Q (log n + 1)``, and ``r_tilde``.

    ``r_tilde = ((gamma + 1/2)(N+1)(Q+1) + Q) log n + (N+1)(Q+1)(log(N+1) + 1) + 1``.
    """
    log_n = math.log2(p.n)
    cells = (p.N + 1) * (p.Q + 1)
    bound = cells * p.b + p.Q * (math.ceil(log_n) + 1)
    r_tilde = ((p.gamma + 0.5) * cells + p.Q) * log_n + cells * (math.log2(p.N + 1) + 1) + 1
    return PolyRateReport(p.payload_bits, float(bound), r_tilde)


class PiecewisePolyCode(CompressionCode):
    def __init__(self, params):
        self.params = params
        self.n = params.n

    @classmethod
    def create(cls, n, N, Q, b, gamma=None):
        return cls(PiecewisePolyParams(n, N, Q, b, gamma))

    @property
    def rate_bits(self):
        return self.params.payload_bits

    @property
    def distortion_bound(self):
        return self.params.distortion_bound

    def encode(self, x):
        return poly_encode(x, self.params)

    def decode(self, bits):
        return poly_decode(bits, self.params)

    def describe(self):
        p = self.params
        return {"kind": "poly", "n": p.n, "N": p.N, "Q": p.Q, "b": p.b, "gamma": p.gamma}
