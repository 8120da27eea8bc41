"""
Piecewise-polynomial signals: segmentation and coding
======================================================

"""

import numpy as np

from cgd import PiecewisePolyCode, viterbi_segmentation
from cgd.polyfit import brute_force_segmentation, monomial_basis

# two linear pieces on a grid of 64 samples, split at sample 23
n = 64
V = monomial_basis(n, 1)
x = np.where(np.arange(n) < 23, V @ [0.1, 0.7], V @ [0.6, 0.3])

# best fit with at most one breakpoint; the exact member fits perfectly
seg = viterbi_segmentation(x, N=1, Q=1)
print("breakpoints:", seg.singularities, "total error:", seg.total_error)

# add noise and compare the dynamic programme with exhaustive search on a short prefix
noisy = x + 0.05 * np.random.default_rng(3).normal(size=n)
short = noisy[:12]
print("dp:", viterbi_segmentation(short, 1, 2).total_error)
print("brute force:", brute_force_segmentation(short, 1, 2).total_error)

# encode with 12-bit coefficients and check the distortion guarantee
code = PiecewisePolyCode.create(n, N=1, Q=1, b=12)
stream = code.encode(x)
xhat = code.decode(stream)
print("stream bits:", len(stream))
print("distortion %.3e  bound %.3e" % (np.linalg.norm(x - xhat), code.distortion_bound))

# projecting twice changes nothing, down to the bit stream
print("idempotent:", code.encode(xhat) == stream)
