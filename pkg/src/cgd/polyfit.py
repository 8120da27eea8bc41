"""Optimal piecewise-polynomial approximation.

A signal ``x`` of length ``n`` is sampled at ``t_k = k / n``.  On a segment
``[i1, i2]`` the fit minimises

    sum_k (x_k - sum_j a_j t_k**j)**2   subject to  a >= 0,  sum(a) <= 1,

over monomial coefficients.  (The simplex already implies ``a_j <= 1``.)
Segments shorter than ``N + 1`` samples are fitted with degree ``L - 1``, the
highest degree the samples determine; the remaining coefficients are zero.

The constrained problem is solved exactly by visiting every face of the
feasible polytope: for each set of free coefficients, with and without the
``sum(a) = 1`` constraint active, the affine least-squares problem is solved
and kept if feasible.  Faces with fewer free coefficients are visited first
and win ties, which makes the result deterministic.

:func:`viterbi_segmentation` places at most ``Q`` breakpoints by dynamic
programming over suffixes; :func:`brute_force_segmentation` enumerates every
placement and exists to cross-check it.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SizeError
from .metrics import as_signal

__all__ = [
    "Segmentation",
    "brute_force_segmentation",
    "effective_degree",
    "monomial_basis",
    "segment_error",
    "viterbi_segmentation",
]

FEAS_TOL = 1e-12
# ties in total error: |a - b| <= TIE_ABS + TIE_REL * max(|a|, |b|)
TIE_ABS, TIE_REL = 1e-14, 1e-12
_CHUNK = 2048


def monomial_basis(n, degree):
    """``n x (degree+1)`` matrix with entries ``(k/n)**j``."""
    t = np.arange(n, dtype=np.float64) / n
    return t[:, None] ** np.arange(degree + 1)


def effective_degree(length, N):
    return min(N, length - 1)


def _faces(d):
    """Faces of ``{a >= 0, sum a <= 1}`` in R^(d+1), in tie-break order."""
    out = []
    for size in range(d + 2):
        for free in itertools.combinations(range(d + 1), size):
            out.append((free, False))
            if size:
                out.append((free, True))
    return out


def _solve(K, rhs):
    """Batched solve; the face systems are nonsingular, pinv is a fallback."""
    try:
        return np.linalg.solve(K, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        return np.einsum("sij,sj->si", np.linalg.pinv(K), rhs)


def _fit_group(x, V, starts, ends):
    """Exact constrained fits for segments that share a degree.

    Returns ``(coefs, errors)`` with shapes ``(S, d+1)`` and ``(S,)``.
    """
    n, p = V.shape
    k = np.arange(n)
    mask = ((k >= starts[:, None]) & (k <= ends[:, None])).astype(np.float64)
    G = np.einsum("sk,kj,kl->sjl", mask, V, V)
    c = mask @ (x[:, None] * V)
    xx = mask @ (x * x)
    scale = np.sqrt(np.einsum("sjj->sj", G))
    scale[scale == 0] = 1.0
    Gs = G / (scale[:, :, None] * scale[:, None, :])
    cs = c / scale

    S = len(starts)
    best_a = np.zeros((S, p))
    best_f = xx.copy()  # the empty face, a = 0
    for free, eq in _faces(p - 1)[1:]:
        idx = list(free)
        q = len(idx)
        if eq:
            K = np.zeros((S, q + 1, q + 1))
            K[:, :q, :q] = Gs[:, idx][:, :, idx]
            K[:, :q, q] = 1.0 / scale[:, idx]
            K[:, q, :q] = 1.0 / scale[:, idx]
            rhs = np.concatenate([cs[:, idx], np.ones((S, 1))], axis=1)
        else:
            K = Gs[:, idx][:, :, idx]
            rhs = cs[:, idx]
        sol = _solve(K, rhs)[:, :q]
        a = np.zeros((S, p))
        a[:, idx] = sol / scale[:, idx]
        feasible = (a >= -FEAS_TOL).all(axis=1) & (a.sum(axis=1) <= 1 + FEAS_TOL)
        if eq:
            feasible &= np.abs(a.sum(axis=1) - 1) <= 1e-9
        f = xx - 2 * np.einsum("sj,sj->s", a, c) + np.einsum("sj,sjl,sl->s", a, G, a)
        better = feasible & (f < best_f - (TIE_ABS + TIE_REL * np.abs(best_f)))
        best_f = np.where(better, f, best_f)
        best_a[better] = a[better]

    best_a = np.clip(best_a, 0.0, 1.0)
    resid = x[None, :] - best_a @ V.T
    errors = np.einsum("sk,sk->s", mask, resid * resid)
    return best_a, errors


def _fit_segments(x, N, starts, ends):
    """Fit many segments at once; coefficient rows are padded to ``N + 1``."""
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    n = x.size
    coefs = np.zeros((starts.size, N + 1))
    errors = np.zeros(starts.size)
    degree = np.minimum(N, ends - starts)
    for d in np.unique(degree):
        V = monomial_basis(n, int(d))
        sel = np.flatnonzero(degree == d)
        for lo in range(0, sel.size, _CHUNK):
            part = sel[lo : lo + _CHUNK]
            a, e = _fit_group(x, V, starts[part], ends[part])
            coefs[part, : d + 1] = a
            errors[part] = e
    return coefs, errors


def segment_error(x, i1, i2, N):
    """Constrained least-squares fit of ``x[i1..i2]`` (inclusive).

    Parameters
    ----------
    x : array_like
        Signal of length ``n``.
    i1, i2 : int
        First and last sample of the segment.
    N : int
        Maximum polynomial degree.

    Returns
    -------
    coefficients : ndarray, shape (N + 1,)
    error : float
        Sum of squared residuals over the segment.
    """
    x = as_signal(x)
    if N < 0:
        raise DomainError(f"degree must be >= 0, got {N}")
    if i1 > i2:
        raise DimensionError(f"empty segment [{i1}, {i2}]")
    if i1 < 0 or i2 >= x.size:
        raise DimensionError(f"segment [{i1}, {i2}] outside signal of length {x.size}")
    coefs, errors = _fit_segments(x, N, [i1], [i2])
    return coefs[0], float(errors[0])


@dataclass(frozen=True)
class Segmentation:
    """Breakpoints and per-segment fits.

    Segment ``l`` covers ``[bounds[l], bounds[l+1])`` where
    ``bounds = (0, *singularities, n)``.
    """

    n: int
    degree: int
    singularities: tuple
    coefficients: tuple
    errors: tuple

    @property
    def total_error(self):
        return float(sum(self.errors))

    @property
    def bounds(self):
        return (0, *self.singularities, self.n)

    def segments(self):
        b = self.bounds
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]

    def evaluate(self):
        """Piecewise polynomial sampled at ``k / n``."""
        V = monomial_basis(self.n, self.degree)
        out = np.empty(self.n)
        for (lo, hi), a in zip(self.segments(), self.coefficients):
            out[lo:hi] = V[lo:hi] @ np.asarray(a)
        return out


def _tied(a, b):
    return abs(a - b) <= TIE_ABS + TIE_REL * max(abs(a), abs(b))


class _Table:
    """Memoised segment fits for one signal."""

    def __init__(self, x, N, pairs):
        starts, ends = zip(*pairs) if pairs else ((), ())
        coefs, errors = _fit_segments(x, N, starts, ends)
        self._coefs = {p: coefs[i] for i, p in enumerate(pairs)}
        self._err = {p: float(errors[i]) for i, p in enumerate(pairs)}

    def error(self, i1, i2):
        return self._err[(i1, i2)]

    def coefs(self, i1, i2):
        return self._coefs[(i1, i2)]


def _build(x, N, table, singularities):
    b = (0, *singularities, x.size)
    pairs = [(b[i], b[i + 1] - 1) for i in range(len(b) - 1)]
    return Segmentation(
        n=x.size,
        degree=N,
        singularities=tuple(int(s) for s in singularities),
        coefficients=tuple(tuple(float(v) for v in table.coefs(*p)) for p in pairs),
        errors=tuple(table.error(*p) for p in pairs),
    )


def _check(x, N, Q):
    x = as_signal(x)
    if x.size < 1:
        raise DimensionError("cannot segment an empty signal")
    if N < 0 or Q < 0:
        raise DomainError(f"need N, Q >= 0, got N={N}, Q={Q}")
    return x


def viterbi_segmentation(x, N, Q):
    """Best approximation with at most ``Q`` breakpoints.

    Dynamic programme over suffixes: ``V_b(s)`` is the least error for
    ``x[s:]`` using at most ``b`` further breakpoints,

        V_b(s) = min(e(s, n-1), min_{s' > s} e(s, s'-1) + V_{b-1}(s')).

    Among placements whose totals tie, the one with fewer breakpoints and
    then the lexicographically smallest breakpoint tuple is returned.
    """
    x = _check(x, N, Q)
    n = x.size
    Q = min(Q, n - 1)
    if Q == 0:
        pairs = [(0, n - 1)]
    elif Q == 1:
        pairs = sorted({(0, j) for j in range(n)} | {(i, n - 1) for i in range(n)})
    else:
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
    table = _Table(x, N, pairs)

    # stage 0: no further breakpoints
    first = range(n) if Q else [0]
    cost = {s: table.error(s, n - 1) for s in first}
    path = {s: () for s in first}
    for stage in range(1, Q + 1):
        states = [0] if stage == Q else range(n)
        new_cost, new_path = {}, {}
        for s in states:
            best_c, best_p = cost[s], path[s]
            for s2 in range(s + 1, n):
                c = table.error(s, s2 - 1) + cost[s2]
                p = (s2, *path[s2])
                if _tied(c, best_c):
                    if (len(p), p) < (len(best_p), best_p):
                        best_c, best_p = min(c, best_c), p
                elif c < best_c:
                    best_c, best_p = c, p
            new_cost[s], new_path[s] = best_c, best_p
        cost, path = new_cost, new_path
    return _build(x, N, table, path[0])


def brute_force_segmentation(x, N, Q, max_n=16):
    """Exhaustive search over every placement of up to ``Q`` breakpoints.

    Raises
    ------
    SizeError
        If ``len(x) > max_n``.
    """
    x = _check(x, N, Q)
    n = x.size
    if n > max_n:
        raise SizeError(f"brute force is limited to n <= {max_n}, got {n}")
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    table = _Table(x, N, pairs)
    scored = []
    for q in range(min(Q, n - 1) + 1):
        for sing in itertools.combinations(range(1, n), q):
            b = (0, *sing, n)
            total = sum(table.error(b[i], b[i + 1] - 1) for i in range(q + 1))
            scored.append((total, sing))
    best = min(t for t, _ in scored)
    winners = [s for t, s in scored if _tied(t, best)]
    return _build(x, N, table, min(winners, key=lambda s: (len(s), s)))
