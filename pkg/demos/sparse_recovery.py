"""
Recovering a sparse signal from fewer measurements than samples
================================================================

"""

import math

import numpy as np

from cgd import CGDConfig, SparseQuantCode, cgd_run, sample_operator

# a 5-sparse signal of length 256 with values in [-1, 1]
n, k, b = 256, 5, 7
rng = np.random.default_rng(0)
x = np.zeros(n)
x[rng.choice(n, k, replace=False)] = rng.uniform(-1, 1, k)

# the code keeps the k largest entries, each quantized to b bits
code = SparseQuantCode.create(n, k, b)
print("bits per codeword:", code.rate_bits)

# 171 Gaussian measurements, about two thirds of n
m = math.ceil(6 * k * math.log2(n / k))
op = sample_operator("gaussian-over-n", m, n, seed=1)
y = op.apply(x)

# run gradient steps, each followed by projection onto the codebook
result = cgd_run(y, op, code, CGDConfig(), ground_truth=x)
trace = result.trace
for it, eta, res, change, err_tilde, _ in trace.rows():
    print(f"iter {it:2d}  residual {res:.3e}  error vs quantized truth {err_tilde:.3e}")

print("stopped by", trace.stop_reason, "after", trace.iterations, "iterations")
print("PSNR %.2f dB" % result.quality.psnr_db)
print("support recovered:", set(np.flatnonzero(result.x_hat)) == set(np.flatnonzero(x)))
