"""Compression-based projected gradient descent.

Each iteration takes a gradient step on ``||y - A x||^2 / 2`` and projects
the result onto the codebook of a compression code:

    x_{k+1} = project(x_k + eta_k * A^T (y - A x_k))

The step is either fixed or chosen per iteration by a one-dimensional
Nelder-Mead search on the post-projection residual.  Iteration stops once
``||x_{k+1} - x_k|| / sqrt(n)`` drops below ``eps_T`` or after ``K1_max``
iterations.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, SizeError
from .metrics import as_signal, normalized_error, quality_report

__all__ = [
    "CGDConfig",
    "CGDResult",
    "SolverTrace",
    "TRACE_HEADER",
    "adaptive_step",
    "cgd_run",
    "cgd_step",
    "csp_exhaustive",
]

TRACE_HEADER = ("iter", "eta", "residual", "norm_change", "ref_err_tilde", "ref_err_x")


@dataclass(frozen=True)
class CGDConfig:
    """Solver settings.

    ``step_mode`` is ``"adaptive"`` or ``"fixed"``.  A fixed run uses ``eta``
    when given, otherwise the operator's ``1 / (m Var(A_ij))``.  ``x0_mode``
    is ``"zero"`` or ``"adjoint"`` (projected, scaled ``A^T y``).
    """

    step_mode: str = "adaptive"
    eta: float = None
    K1_max: int = 50
    K2_max: int = 25
    eps_T: float = 1e-3
    x0_mode: str = "zero"
    seed: int = 0

    def __post_init__(self):
        if self.step_mode not in ("adaptive", "fixed"):
            raise DomainError(f"step_mode must be 'adaptive' or 'fixed', got {self.step_mode!r}")
        if self.x0_mode not in ("zero", "adjoint"):
            raise DomainError(f"x0_mode must be 'zero' or 'adjoint', got {self.x0_mode!r}")
        if self.K1_max < 1 or self.K2_max < 0:
            raise DomainError("need K1_max >= 1 and K2_max >= 0")
        if not self.eps_T > 0:
            raise DomainError(f"eps_T must be positive, got {self.eps_T}")
        if self.eta is not None and not self.eta > 0:
            raise DomainError(f"fixed step must be positive, got {self.eta}")


def _fmt(v):
    return "" if v is None else repr(float(v))


@dataclass
class SolverTrace:
    """Per-iteration record.  Row 0 describes the starting point.

    For row ``k >= 1``, ``eta[k]`` is the step that produced ``x_k``,
    ``residual[k] = ||y - A x_k||`` and ``norm_change[k] = ||x_k - x_{k-1}|| / sqrt(n)``.
    ``eta_init[k]`` and ``residual_at_init[k]`` record the adaptive search's
    starting step and the residual it would have given.
    """

    eta: list = field(default_factory=list)
    eta_init: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    residual_at_init: list = field(default_factory=list)
    norm_change: list = field(default_factory=list)
    ref_err_tilde: list = field(default_factory=list)
    ref_err_x: list = field(default_factory=list)
    stop_reason: str = None

    def __len__(self):
        return len(self.residual)

    @property
    def iterations(self):
        return len(self) - 1

    def rows(self):
        for k in range(len(self)):
            yield (k, self.eta[k], self.residual[k], self.norm_change[k],
                   self.ref_err_tilde[k], self.ref_err_x[k])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, *vals in self.rows():
            w.writerow([k, *(_fmt(v) for v in vals)])
        return buf.getvalue()


@dataclass
class CGDResult:
    x_hat: np.ndarray
    trace: SolverTrace
    quality: object = None


def _check(y, op, code):
    y = np.asarray(y, dtype=np.float64)
    if op.m < 1 or op.n < 1:
        raise DimensionError("operator must have m, n >= 1")
    if y.shape != (op.m,):
        raise DimensionError(f"measurements have shape {y.shape}, operator expects ({op.m},)")
    if code.n != op.n:
        raise DimensionError(f"code length {code.n} does not match operator width {op.n}")
    return y


def cgd_step(x_k, y, op, eta, code):
    """One projected gradient step ``project(x_k + eta A^T (y - A x_k))``."""
    if not eta > 0:
        raise DomainError(f"step size must be positive, got {eta}")
    x_k = as_signal(x_k, op.n)
    grad = op.adjoint(np.asarray(y, dtype=np.float64) - op.apply(x_k))
    return code.project(x_k + eta * grad)


def adaptive_step(x_k, y, op, code, eta_init, K2_max=25, tol=1e-8, _cache=None):
    """Step size minimising the residual after projection.

    Runs Nelder-Mead in one dimension on

        l(eta) = ||y - A project(x_k + eta A^T (y - A x_k))||

    from the simplex ``{eta_init, 2 eta_init}`` for at most ``K2_max``
    iterations.  Probes at or below zero are replaced by half the current
    best point.  The best probe is returned; ``eta_init`` wins unless some
    probe is strictly better.

    Returns
    -------
    eta : float
    """
    if not eta_init > 0:
        raise DomainError(f"eta_init must be positive, got {eta_init}")
    x_k = as_signal(x_k, op.n)
    y = np.asarray(y, dtype=np.float64)
    g = op.adjoint(y - op.apply(x_k))
    cache = {} if _cache is None else _cache

    def loss(eta):
        if eta not in cache:
            x = code.project(x_k + eta * g)
            cache[eta] = (float(np.linalg.norm(y - op.apply(x))), x)
        return cache[eta][0]

    best_eta, best_l = eta_init, loss(eta_init)
    if not np.any(g):
        return best_eta

    def probe(eta, anchor):
        return eta if eta > 0 else anchor / 2.0

    pts = sorted([(loss(eta_init), 0, eta_init), (loss(2 * eta_init), 1, 2 * eta_init)])
    for _ in range(K2_max):
        (f1, _, x1), (f2, _, x2) = pts
        if abs(x2 - x1) <= tol * abs(x1):
            break
        xr = probe(2 * x1 - x2, x1)
        fr = loss(xr)
        if fr < f1:
            xe = probe(x1 + 2 * (x1 - x2), x1)
            fe = loss(xe)
            new = (fe, xe) if fe < fr else (fr, xr)
        else:
            if fr < f2:
                xc = probe(x1 + 0.5 * (xr - x1), x1)
                fc = loss(xc)
                ok = fc <= fr
            else:
                xc = x1 + 0.5 * (x2 - x1)
                fc = loss(xc)
                ok = fc < f2
            new = (fc, xc) if ok else None
            if new is None:
                xs = x1 + 0.5 * (x2 - x1)
                new = (loss(xs), xs)
        pts = sorted([(f1, 0, x1), (new[0], 1, new[1])])

    for eta, (l, _) in cache.items():
        if l < best_l or (l == best_l and eta == best_eta):
            best_eta, best_l = eta, l
    return best_eta


def cgd_run(y, op, code, config=None, ground_truth=None, x0=None):
    """Run the iteration to convergence.

    Parameters
    ----------
    y : array_like, shape (m,)
        Measurements.
    op : LinearOperator
    code : CompressionCode
    config : CGDConfig, optional
    ground_truth : array_like, optional
        When given, the trace records errors against it and against its
        projection, and the result carries a quality report.
    x0 : array_like, optional
        Explicit starting point; overrides ``config.x0_mode``.

    Returns
    -------
    CGDResult
    """
    cfg = config or CGDConfig()
    y = _check(y, op, code)
    n = op.n
    root_n = math.sqrt(n)
    base_eta = cfg.eta if cfg.eta is not None else op.default_step

    if x0 is not None:
        x = as_signal(x0, n)
    elif cfg.x0_mode == "adjoint":
        x = code.project(base_eta * op.adjoint(y))
    else:
        x = as_signal(np.zeros(n))

    truth = tilde = None
    if ground_truth is not None:
        truth = as_signal(ground_truth, n)
        tilde = code.project(truth)

    trace = SolverTrace()

    def record(x, eta, eta0, res0, change):
        trace.eta.append(eta)
        trace.eta_init.append(eta0)
        trace.residual.append(float(np.linalg.norm(y - op.apply(x))))
        trace.residual_at_init.append(res0)
        trace.norm_change.append(change)
        trace.ref_err_tilde.append(None if tilde is None else normalized_error(x, tilde))
        trace.ref_err_x.append(None if truth is None else normalized_error(x, truth))

    record(x, None, None, None, None)
    eta = base_eta
    trace.stop_reason = "max_iters"
    for _ in range(cfg.K1_max):
        if cfg.step_mode == "adaptive":
            cache = {}
            eta0 = eta
            eta = adaptive_step(x, y, op, code, eta0, cfg.K2_max, _cache=cache)
            res0 = cache[eta0][0]
            x_new = cache[eta][1]
        else:
            eta0 = res0 = None
            x_new = cgd_step(x, y, op, eta, code)
        change = float(np.linalg.norm(x_new - x) / root_n)
        x = x_new
        record(x, eta, eta0, res0, change)
        if change < cfg.eps_T:
            trace.stop_reason = "threshold"
            break

    quality = quality_report(truth, x) if truth is not None else None
    return CGDResult(x_hat=x, trace=trace, quality=quality)


def csp_exhaustive(y, op, codebook, guard=1 << 20):
    """Codeword with the smallest measurement residual.

    Parameters
    ----------
    codebook : sequence of array_like
        Every candidate signal; ties go to the earliest.  Candidates within
        a relative ``1e-9`` of the best squared residual are rescored with
        ``op.apply``.

    Returns
    -------
    x_hat : ndarray
    residual : float
        ``||y - A x_hat||_2`` (not squared).
    """
    y = np.asarray(y, dtype=np.float64)
    words = []
    for i, u in enumerate(codebook):
        if i >= guard:
            raise SizeError(f"codebook exceeds the search guard of {guard} words")
        words.append(as_signal(u, op.n))
    if not words:
        raise SizeError("empty codebook")
    U = np.stack(words)
    R = y[None, :] - U @ op.matrix().T
    sq = np.einsum("ij,ij->i", R, R)
    # the batched product only shortlists; near-ties are rescored with
    # op.apply so the residual matches the solver's own arithmetic
    cutoff = sq.min() * (1 + 1e-9) + 1e-300
    best_j, best_r = None, math.inf
    for j in np.flatnonzero(sq <= cutoff):
        r = float(np.linalg.norm(y - op.apply(words[j])))
        if r < best_r:
            best_j, best_r = int(j), r
    return words[best_j], best_r
