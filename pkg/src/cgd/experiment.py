"""Experiment configuration, synthetic signals and the trial loop behind the CLI.

Configs are JSON objects with these sections (unknown keys are rejected)::

    {
      "signal":     {"kind": "sparse", "n": 256, "k": 5, "codeword": false}
                  | {"kind": "piecewise-poly", "n": 64, "N": 1, "Q": 1}
                  | {"kind": "file", "path": "x.f64v"},
      "operator":   {"kind": "gaussian-over-n", "ratio": 0.5, "sigma_a": 1.0},   # or "m"
      "code":       {"kind": "sparse", "k": 5, "b": 7}          # or "gamma" instead of "b"
                  | {"kind": "poly", "N": 1, "Q": 1, "b": 12}
                  | {"kind": "external", "encode_cmd": "...", "decode_cmd": "...", "fmt": "f64v"}
                  | {"kind": "identity"},
      "noise":      {"snr_db": null},                           # null means noiseless
      "solver":     {"step_mode": "adaptive", "K1_max": 50, ...},
      "experiment": {"trials": 5, "seed": 0},
      "sweep":      {"ratios": [0.3, 0.5], "snr_db": [null, 20]}
    }

Every random draw is keyed off the master seed: trial ``t`` uses child seeds
``(seed, t, 0)`` for the signal, ``(seed, t, 1)`` for the operator and
``(seed, t, 2)`` for the noise.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codes import (
    ExternalCodec,
    ExternalCodecSpec,
    IdentityCode,
    PiecewisePolyCode,
    PiecewisePolyParams,
    SparseQuantCode,
    SparseQuantParams,
)
from .errors import ConfigError, DomainError
from .io import read_signal
from .metrics import RNG_ALGORITHM, SeededRng, as_signal, derive_seed, measurement_snr
from .operators import KINDS, NoiseSpec, add_noise_at_snr, sample_operator
from .polyfit import monomial_basis
from .solver import CGDConfig, cgd_run

__all__ = [
    "ExperimentConfig",
    "SIGNAL_LAWS",
    "build_code",
    "generate_signal",
    "load_config",
    "parse_config",
    "run_trials",
    "sweep_rows",
]

SIGNAL_LAWS = {
    "sparse": "support uniform without replacement; nonzero values uniform on [-1, 1]",
    "piecewise-poly": (
        "Q breakpoints uniform without replacement from 1..n-1; per segment, "
        "N+1 coefficients uniform on the simplex {a >= 0, sum a <= 1}"
    ),
    "file": "loaded from file",
}

_SECTIONS = {"signal", "operator", "code", "noise", "solver", "experiment", "sweep"}
_SIGNAL_KEYS = {
    "sparse": ({"n", "k"}, {"codeword"}),
    "piecewise-poly": ({"n", "N", "Q"}, {"codeword"}),
    "file": ({"path"}, {"codeword"}),
}
_CODE_KEYS = {
    "sparse": ({"k"}, {"b", "gamma"}),
    "poly": ({"N", "Q"}, {"b", "gamma"}),
    "external": ({"encode_cmd", "decode_cmd"}, {"fmt", "timeout", "pgm_scale", "pgm_shape"}),
    "identity": (set(), set()),
}
_SOLVER_KEYS = {"step_mode", "eta", "K1_max", "K2_max", "eps_T", "x0_mode"}


def _keys(where, obj, required, optional):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    missing = required - obj.keys()
    unknown = obj.keys() - required - optional
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _kind(where, obj, table):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where} needs a 'kind'")
    kind = obj["kind"]
    if kind not in table:
        raise ConfigError(f"{where}: unknown kind {kind!r}; expected one of {sorted(table)}")
    req, opt = table[kind]
    _keys(where, obj, req | {"kind"}, opt)
    return kind


def _snr(value):
    if value is None or value == "inf":
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"snr_db must be a number or null, got {value!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    signal: dict
    operator: dict
    code: dict
    noise_snr_db: float
    solver: CGDConfig
    trials: int
    seed: int
    sweep_ratios: tuple
    sweep_snr_db: tuple
    base_dir: str = "."

    def with_cell(self, ratio, snr_db):
        op = {k: v for k, v in self.operator.items() if k != "m"}
        op["ratio"] = ratio
        return _replace(self, operator=op, noise_snr_db=snr_db)

    def echo(self):
        return {
            "signal": self.signal,
            "operator": self.operator,
            "code": self.code,
            "noise": {"snr_db": None if math.isinf(self.noise_snr_db) else self.noise_snr_db},
            "solver": {k: getattr(self.solver, k) for k in sorted(_SOLVER_KEYS)},
            "experiment": {"trials": self.trials, "seed": self.seed},
        }


def _replace(cfg, **kw):
    d = dict(cfg.__dict__)
    d.update(kw)
    return ExperimentConfig(**d)


def parse_config(raw, base_dir=".", seed=None):
    """Validate a config mapping.  ``seed`` overrides ``experiment.seed``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = raw.keys() - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    if "signal" not in raw:
        raise ConfigError("config needs a 'signal' section")
    signal = dict(raw["signal"])
    _kind("signal", signal, _SIGNAL_KEYS)

    operator = dict(raw.get("operator", {"kind": "gaussian-over-n", "ratio": 0.5}))
    _keys("operator", operator, {"kind"}, {"m", "ratio", "sigma_a"})
    if operator["kind"] not in KINDS:
        raise ConfigError(f"operator: unknown kind {operator['kind']!r}; expected one of {KINDS}")
    if ("m" in operator) == ("ratio" in operator):
        raise ConfigError("operator needs exactly one of 'm' and 'ratio'")
    if "ratio" in operator and not 0 < operator["ratio"] <= 1:
        raise ConfigError(f"operator.ratio must lie in (0, 1], got {operator['ratio']}")

    code = dict(raw.get("code", {"kind": "identity"}))
    _kind("code", code, _CODE_KEYS)
    if code["kind"] in ("sparse", "poly") and ("b" in code) == ("gamma" in code):
        raise ConfigError("code needs exactly one of 'b' and 'gamma'")

    noise = raw.get("noise", {})
    _keys("noise", noise, set(), {"snr_db"})
    solver_raw = raw.get("solver", {})
    _keys("solver", solver_raw, set(), _SOLVER_KEYS)
    exp = raw.get("experiment", {})
    _keys("experiment", exp, set(), {"trials", "seed"})
    sweep = raw.get("sweep", {})
    _keys("sweep", sweep, set(), {"ratios", "snr_db"})

    try:
        solver = CGDConfig(**solver_raw)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"solver: {exc}") from None
    trials = exp.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"experiment.trials must be a positive integer, got {trials!r}")
    master = exp.get("seed", 0) if seed is None else seed
    if not isinstance(master, int) or not 0 <= master < 1 << 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {master!r}")
    ratios = tuple(float(r) for r in sweep.get("ratios", ()))
    if any(not 0 < r <= 1 for r in ratios):
        raise ConfigError("sweep ratios must lie in (0, 1]")
    return ExperimentConfig(
        signal=signal,
        operator=operator,
        code=code,
        noise_snr_db=_snr(noise.get("snr_db")),
        solver=solver,
        trials=trials,
        seed=master,
        sweep_ratios=ratios,
        sweep_snr_db=tuple(_snr(s) for s in sweep.get("snr_db", ())),
        base_dir=str(base_dir),
    )


def load_config(path, seed=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, os.path.dirname(os.path.abspath(path)), seed)


# --- builders ---------------------------------------------------------------


def signal_length(cfg):
    s = cfg.signal
    if s["kind"] == "file":
        return _load_file(cfg).size
    return int(s["n"])


def _load_file(cfg):
    path = cfg.signal["path"]
    if not os.path.isabs(path):
        path = os.path.join(cfg.base_dir, path)
    return read_signal(path)


def build_code(spec, n):
    kind = spec["kind"]
    try:
        if kind == "sparse":
            if "b" in spec:
                return SparseQuantCode(SparseQuantParams(n, int(spec["k"]), int(spec["b"])))
            return SparseQuantCode(SparseQuantParams.from_gamma(n, int(spec["k"]), float(spec["gamma"])))
        if kind == "poly":
            if "b" in spec:
                return PiecewisePolyCode(PiecewisePolyParams(n, int(spec["N"]), int(spec["Q"]), int(spec["b"])))
            return PiecewisePolyCode(
                PiecewisePolyParams.from_gamma(n, int(spec["N"]), int(spec["Q"]), float(spec["gamma"]))
            )
        if kind == "external":
            shape = spec.get("pgm_shape")
            ext = ExternalCodecSpec(
                encode_cmd=spec["encode_cmd"],
                decode_cmd=spec["decode_cmd"],
                fmt=spec.get("fmt", "f64v"),
                timeout=float(spec.get("timeout", 60.0)),
                pgm_scale=float(spec.get("pgm_scale", 1.0)),
                pgm_shape=tuple(shape) if shape else None,
            )
            return ExternalCodec(n, ext)
        return IdentityCode(n)
    except DomainError as exc:
        raise ConfigError(f"code: {exc}") from None


def generate_signal(spec, seed):
    """Draw a synthetic signal according to :data:`SIGNAL_LAWS`."""
    rng = SeededRng(seed).generator()
    n = int(spec["n"])
    if spec["kind"] == "sparse":
        k = int(spec["k"])
        x = np.zeros(n)
        x[rng.choice(n, size=k, replace=False)] = rng.uniform(-1.0, 1.0, size=k)
        return as_signal(x)
    N, Q = int(spec["N"]), int(spec["Q"])
    q = min(Q, n - 1)
    cuts = np.sort(rng.choice(np.arange(1, n), size=q, replace=False)) if q else np.array([], int)
    bounds = [0, *cuts.tolist(), n]
    V = monomial_basis(n, N)
    x = np.empty(n)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        # uniform on the simplex: drop the slack coordinate of a flat Dirichlet
        a = rng.dirichlet(np.ones(N + 2))[: N + 1]
        x[lo:hi] = V[lo:hi] @ a
    return as_signal(x)


def resolve_m(operator, n):
    if "m" in operator:
        return int(operator["m"])
    return int(math.ceil(operator["ratio"] * n - 1e-12))


# --- trials -----------------------------------------------------------------


def _one_trial(args):
    cfg, trial = args
    n = signal_length(cfg)
    code = build_code(cfg.code, n)
    if cfg.signal["kind"] == "file":
        x = _load_file(cfg)
    else:
        x = generate_signal(cfg.signal, derive_seed(cfg.seed, trial, 0))
    if cfg.signal.get("codeword"):
        x = code.project(x)
    m = resolve_m(cfg.operator, n)
    op = sample_operator(cfg.operator["kind"], m, n, cfg.operator.get("sigma_a", 1.0),
                         derive_seed(cfg.seed, trial, 1))
    clean = op.apply(x)
    y, scale = add_noise_at_snr(clean, NoiseSpec(cfg.noise_snr_db, derive_seed(cfg.seed, trial, 2)))
    res = cgd_run(y, op, code, cfg.solver, ground_truth=x)
    noise = y - clean
    realized = measurement_snr(clean, noise) if np.any(noise) else math.inf
    return {
        "trial": trial,
        "m": m,
        "n": n,
        "psnr_db": res.quality.psnr_db,
        "mse": res.quality.mse,
        "normalized_error": res.quality.normalized_error,
        "ref_err_tilde": res.trace.ref_err_tilde[-1],
        "snr_db": realized,
        "noise_scale": scale,
        "iterations": res.trace.iterations,
        "stop_reason": res.trace.stop_reason,
        "final_residual": res.trace.residual[-1],
        "trace_csv": res.trace.to_csv(),
    }


def run_trials(cfg, jobs=1):
    """Run every trial of ``cfg``; results come back in trial order."""
    work = [(cfg, t) for t in range(cfg.trials)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one_trial, work))
    return [_one_trial(w) for w in work]


def summarize(cfg, results):
    psnr = np.array([r["psnr_db"] for r in results])
    iters = np.array([r["iterations"] for r in results], dtype=float)
    finite = psnr[np.isfinite(psnr)]
    return {
        "rng_algorithm": RNG_ALGORITHM,
        "master_seed": cfg.seed,
        "signal_law": SIGNAL_LAWS[cfg.signal["kind"]],
        "config": cfg.echo(),
        "aggregate": {
            "psnr_mean": float(np.mean(psnr)) if finite.size == psnr.size else math.inf,
            "psnr_std": float(np.std(psnr)) if finite.size == psnr.size else None,
            "iterations_mean": float(np.mean(iters)),
            "iterations_std": float(np.std(iters)),
            "stop_reasons": [r["stop_reason"] for r in results],
        },
        "trials": [{k: v for k, v in r.items() if k != "trace_csv"} for r in results],
    }


def _fmt_snr(s):
    return "inf" if math.isinf(s) else repr(float(s))


def sweep_rows(cfg, jobs=1):
    """``(ratio, snr_db, trial, psnr, iters, stop_reason)`` for every cell and trial."""
    if not cfg.sweep_ratios or not cfg.sweep_snr_db:
        raise ConfigError("sweep needs nonempty 'ratios' and 'snr_db' lists")
    cells = [(r, s) for r in cfg.sweep_ratios for s in cfg.sweep_snr_db]
    work = [(cfg.with_cell(r, s), t) for r, s in cells for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_trial, work))
    else:
        results = [_one_trial(w) for w in work]
    rows = []
    for (c, t), res in zip(work, results):
        rows.append((repr(float(c.operator["ratio"])), _fmt_snr(c.noise_snr_db), t,
                     repr(float(res["psnr_db"])), res["iterations"], res["stop_reason"]))
    return rows
