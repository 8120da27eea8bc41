"""
Monte-Carlo checks of the tail bounds behind the step inequality
=================================================================

"""

import math

from cgd.theory import eval_fstar, tail_check, theorem2_step_bound

# chi-square tails, largest singular value, and the inner-product deviation
for which, params in [
    ("lemma7_lower", {"m": 10, "tau": 0.5}),
    ("lemma7_upper", {"m": 50, "tau": 0.3}),
    ("corollary2_sigma_max", {"m": 20, "n": 50, "t": 1.0}),
    ("lemma10_subgauss", {"m": 400, "t": 0.45}),
]:
    rep = tail_check(which, params, trials=1000, seed=0)
    print(f"{which:22s} bound {rep.theoretical_bound:.4g}  observed {rep.empirical_value:.4g}  "
          f"{'pass' if rep.passed else 'FAIL'}")

# the rate function for the inner-product deviation, against its value at u = -1
for t in (0.0, 0.45, 0.9):
    print(f"f*({t}) = {eval_fstar(t):.6f}   (t - ln(1+t))/2 = {(t - math.log1p(t)) / 2:.6f}")

# how the one-step bound shrinks with more measurements
for m in (100, 400, 1600):
    print(m, theorem2_step_bound(prev_err=1.0, delta=0.01, m=m, n=256, r=100, eps=0.1,
                                 sigma_z=0.1, sigma_a=1.0))
