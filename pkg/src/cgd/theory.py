"""Recovery-bound formulas and Monte-Carlo checks of the tail inequalities.

The step bounds describe one iteration of projected gradient descent with a
fixed step: how the distance to the projected target ``x_tilde`` contracts,
plus additive terms for code distortion ``delta`` and measurement noise.
Rates ``r`` are in bits and logarithms follow the formulas as written (``ln``
where natural, base 2 where a power of two appears).

:func:`tail_check` samples the random quantity behind one concentration
inequality and compares its empirical tail frequency with the bound.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .metrics import SeededRng, derive_seed
from .operators import sample_operator, spectral_norm, subgaussian_constant

__all__ = [
    "BoundReport",
    "CHECKS",
    "SubGaussianBound",
    "binomial_slack",
    "corollary1_step_bound",
    "eval_fstar",
    "mu_coefficient",
    "tail_check",
    "theorem2_min_measurements",
    "theorem2_step_bound",
    "theorem2_success_probability",
    "theorem3_step_bound",
    "theorem4_step_bound",
]

UNIT_TOL = 1e-9


def _nonneg(**kw):
    for k, v in kw.items():
        if not v >= 0:
            raise DomainError(f"{k} must be nonnegative, got {v}")


def _dims(m, n):
    if m < 1 or n < 1:
        raise DomainError(f"need m, n >= 1, got m={m}, n={n}")


def mu_coefficient(u, v, eta, op):
    """``<u, v> - eta <A u, A v>`` for unit vectors ``u`` and ``v``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    for name, w in (("u", u), ("v", v)):
        if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
            raise DomainError(f"{name} must have unit norm, got {np.linalg.norm(w)!r}")
    return float(u @ v - eta * (op.apply(u) @ op.apply(v)))


def theorem2_step_bound(prev_err, delta, m, n, r, eps, sigma_z, sigma_a):
    """One-step error bound for i.i.d. ``N(0, sigma_a^2)`` measurements.

    ``0.9 prev + 2 (2 + sqrt(n/m))^2 delta + (sigma_z/sigma_a) sqrt(8 (1+eps) r / m)``
    """
    _dims(m, n)
    _nonneg(prev_err=prev_err, delta=delta, r=r, eps=eps, sigma_z=sigma_z)
    if not sigma_a > 0:
        raise DomainError("sigma_a must be positive")
    return (
        0.9 * prev_err
        + 2.0 * (2.0 + math.sqrt(n / m)) ** 2 * delta
        + (sigma_z / sigma_a) * math.sqrt(8.0 * (1.0 + eps) * r / m)
    )


def theorem2_min_measurements(r, eps):
    """Smallest ``m`` covered by the Gaussian step bound: ``80 r (1 + eps)``."""
    return 80.0 * r * (1.0 + eps)


def theorem2_success_probability(r, eps):
    """``1 - 2^(1 - 2 eps r)``."""
    return 1.0 - 2.0 ** (1.0 - 2.0 * eps * r)


def corollary1_step_bound(prev_err, delta, m, n, r, eps, sigma_z, sigma_a):
    """Normalised bound for ``N(0, sigma_a^2 / n)`` entries and step ``n / (sigma_a^2 m)``.

    ``prev_err`` and the result are ``||x - x_tilde|| / sqrt(n)``.
    """
    _dims(m, n)
    _nonneg(prev_err=prev_err, delta=delta, r=r, eps=eps, sigma_z=sigma_z)
    if not sigma_a > 0:
        raise DomainError("sigma_a must be positive")
    return (
        0.9 * prev_err
        + 2.0 * (2.0 + math.sqrt(n / m)) ** 2 * delta / math.sqrt(n)
        + (sigma_z / sigma_a) * math.sqrt(8.0 * (1.0 + eps) * r / m)
    )


def theorem3_step_bound(prev_err, delta, m, n, r, eps, sigma_z, sigma_a, xi):
    """:func:`corollary1_step_bound` plus ``xi / sqrt(n)`` for a projection that is off by at most ``xi``."""
    _nonneg(xi=xi)
    return corollary1_step_bound(prev_err, delta, m, n, r, eps, sigma_z, sigma_a) + xi / math.sqrt(n)


class SubGaussianBound(NamedTuple):
    bound: float
    m_required: float
    success_probability: float


def theorem4_step_bound(prev_err, mu0, K, delta, m, n, r, eps, sigma_z, sigma_a):
    """One-step bound for i.i.d. sub-Gaussian entries with ``psi_2`` norm ``K``.

    Returns
    -------
    SubGaussianBound
        ``bound = mu0 prev + 8 (1 + 3 K n / (sigma_a^2 m)) delta + (9 K sigma_z / sigma_a^2) sqrt(r (1+eps) / m)``,
        the requirement ``m > 16 K^4 (1+eps) r / (mu0^2 sigma_a^4 log2 e)`` and
        the success probability ``1 - 2^(-4 r eps) - e^(-m/4) - 2^(-2 r eps)``.
    """
    _dims(m, n)
    _nonneg(prev_err=prev_err, delta=delta, r=r, eps=eps, sigma_z=sigma_z)
    if not 0 < mu0 < 1:
        raise DomainError(f"mu0 must lie in (0, 1), got {mu0}")
    if not (K > 0 and sigma_a > 0):
        raise DomainError("K and sigma_a must be positive")
    if mu0 * sigma_a**2 > 2 * K**2:
        raise DomainError("need mu0 * sigma_a^2 <= 2 K^2")
    bound = (
        mu0 * prev_err
        + 8.0 * (1.0 + 3.0 * K * n / (sigma_a**2 * m)) * delta
        + (9.0 * K * sigma_z / sigma_a**2) * math.sqrt(r * (1.0 + eps) / m)
    )
    m_req = 16.0 * K**4 * (1.0 + eps) * r / (mu0**2 * sigma_a**4 * math.log2(math.e))
    prob = 1.0 - 2.0 ** (-4 * r * eps) - math.exp(-m / 4.0) - 2.0 ** (-2 * r * eps)
    return SubGaussianBound(bound, m_req, prob)


# --- rate function of the inner-product deviation ---------------------------

_EDGE = 1e-9


def _inner(s, u, t):
    with np.errstate(divide="ignore"):
        return s * (t - u) + 0.5 * np.log((1.0 + s * u) ** 2 - s * s)


def _inner_max(u, t, grid=200):
    hi = (1.0 - _EDGE) / (1.0 - u)
    s = hi * np.geomspace(1e-9, 1.0, grid)
    vals = _inner(s, u, t)
    i = int(np.argmax(vals))
    lo_s = s[i - 1] if i > 0 else 0.0
    hi_s = s[i + 1] if i + 1 < grid else hi
    res = minimize_scalar(lambda z: -_inner(z, u, t), bounds=(lo_s, hi_s), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(vals[i]), float(-res.fun), 0.0)


def eval_fstar(t, grid=401):
    """``min_u max_s  s (t - u) + ln((1 + s u)^2 - s^2) / 2``.

    ``u`` ranges over ``[-1, 1]`` and ``s`` over ``(0, 1 / (1 - u))``.  Both
    levels use a grid followed by bounded scalar refinement, with the open
    ends pulled in by ``1e-9``.  The inner supremum is at least zero (its
    limit as ``s -> 0``).
    """
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    us = np.linspace(-1.0 + _EDGE, 1.0 - _EDGE, grid)
    vals = np.array([_inner_max(u, t) for u in us])
    i = int(np.argmin(vals))
    lo = us[max(i - 1, 0)]
    hi = us[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda u: _inner_max(u, t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(min(vals[i], res.fun))


# --- Monte-Carlo tail checks ------------------------------------------------


def binomial_slack(bound, trials):
    """Three standard deviations of a frequency estimate at probability ``bound``."""
    p = min(max(bound, 0.0), 1.0)
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class BoundReport:
    name: str
    params: dict
    theoretical_bound: float
    empirical_value: float
    trials: int
    passed: bool
    slack: float = 0.0
    events: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def pass_(self):
        return self.passed

    def as_dict(self):
        return {
            "name": self.name,
            "params": dict(self.params),
            "theoretical_bound": self.theoretical_bound,
            "empirical_value": self.empirical_value,
            "trials": self.trials,
            "events": self.events,
            "slack": self.slack,
            "pass": self.passed,
        }


def _trial_rng(seed, trial):
    return SeededRng(derive_seed(seed, trial)).generator()


def _unit_pair(n, seed):
    rng = SeededRng(derive_seed(seed, 1 << 32)).generator()
    u, v = rng.standard_normal((2, n))
    return u / np.linalg.norm(u), v / np.linalg.norm(v)


def _lemma7_lower(p, trials, seed):
    m, tau = int(p["m"]), float(p["tau"])
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    bound = math.exp(m / 2.0 * (tau + math.log(1.0 - tau)))
    hits = sum(
        float(np.sum(_trial_rng(seed, i).standard_normal(m) ** 2)) <= m * (1 - tau) for i in range(trials)
    )
    return bound, hits


def _lemma7_upper(p, trials, seed):
    m, tau = int(p["m"]), float(p["tau"])
    if not tau > 0:
        raise DomainError("tau must be positive")
    bound = math.exp(-m / 2.0 * (tau - math.log(1.0 + tau)))
    hits = sum(
        float(np.sum(_trial_rng(seed, i).standard_normal(m) ** 2)) >= m * (1 + tau) for i in range(trials)
    )
    return bound, hits


def _corollary2(p, trials, seed):
    m, n, t = int(p["m"]), int(p["n"]), float(p["t"])
    bound = math.exp(-m * t * t / 2.0)
    level = (1 + t) * math.sqrt(m) + math.sqrt(n)
    hits = 0
    for i in range(trials):
        op = sample_operator("gaussian-unit", m, n, 1.0, derive_seed(seed, i))
        hits += spectral_norm(op, max_iters=5000, tol=1e-12).sigma >= level
    return bound, hits


def _deviation_hits(kind, p, trials, seed):
    m, n, t = int(p["m"]), int(p.get("n", 50)), float(p["t"])
    sigma = float(p.get("sigma_a", 1.0))
    u, v = _unit_pair(n, seed)
    eta = 1.0 / (m * sigma**2)
    hits = 0
    for i in range(trials):
        op = sample_operator(kind, m, n, sigma, derive_seed(seed, i))
        hits += mu_coefficient(u, v, eta, op) >= t
    return hits


def _lemma10(p, trials, seed):
    sigma = float(p.get("sigma_a", 1.0))
    K = float(p.get("K", subgaussian_constant(sigma)))
    m, t = int(p["m"]), float(p["t"])
    c = t * sigma**2 / (2 * K**2)
    bound = math.exp(-m * c * min(1.0, c))
    return bound, _deviation_hits("rademacher", p, trials, seed)


def _corollary6(p, trials, seed):
    m = int(p["m"])
    q = dict(p, t=0.45)
    return 2.0 ** (-m / 20.0), _deviation_hits("gaussian-unit", q, trials, seed)


CHECKS = {
    "lemma7_lower": _lemma7_lower,
    "lemma7_upper": _lemma7_upper,
    "corollary2_sigma_max": _corollary2,
    "lemma10_subgauss": _lemma10,
    "corollary6_mu": _corollary6,
}


def tail_check(which, params, trials=1000, seed=0):
    """Empirical tail frequency against a probability bound.

    Parameters
    ----------
    which : str
        One of :data:`CHECKS`:

        ``lemma7_lower``  ``P(sum G_i^2 <= m(1-tau)) <= exp(m/2 (tau + ln(1-tau)))``
        ``lemma7_upper``  ``P(sum G_i^2 >= m(1+tau)) <= exp(-m/2 (tau - ln(1+tau)))``
        ``corollary2_sigma_max``  ``P(sigma_max >= (1+t) sqrt(m) + sqrt(n)) <= exp(-m t^2 / 2)``
        ``lemma10_subgauss``  Rademacher deviation of ``<u,v> - <Au,Av>/(m sigma^2)``
        ``corollary6_mu``  the same deviation at ``0.45`` for Gaussian entries, bound ``2^(-m/20)``
    params : dict
    trials : int
        At least 100.
    seed : int
        Trial ``i`` draws from the child seed ``(seed, i)``.
    """
    if which not in CHECKS:
        raise DomainError(f"unknown check {which!r}; expected one of {sorted(CHECKS)}")
    if trials < 100:
        raise DomainError(f"need at least 100 trials, got {trials}")
    bound, hits = CHECKS[which](dict(params), int(trials), int(seed))
    freq = hits / trials
    slack = binomial_slack(bound, trials)
    return BoundReport(
        name=which,
        params=dict(params),
        theoretical_bound=float(bound),
        empirical_value=float(freq),
        trials=int(trials),
        passed=bool(freq <= bound + slack),
        slack=slack,
        events=int(hits),
    )
