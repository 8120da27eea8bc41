"""Command-line entry point.

Exit codes::

    0  success
    1  a theory check ran and failed
    2  bad configuration, parameters or unknown check name
    3  external codec failure
    4  dimension mismatch
    5  file input/output error
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import experiment as ex
from .codes import enumerate_codebook
from .errors import CGDError, CodecAdapterError, ConfigError, DecodeError, DimensionError
from .io import read_signal, write_f64v
from .metrics import derive_seed
from .operators import NoiseSpec, add_noise_at_snr, sample_operator
from .solver import cgd_run, csp_exhaustive
from .theory import CHECKS, tail_check

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CODEC, EXIT_DIM, EXIT_IO = 0, 1, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides experiment.seed)")
    p.add_argument("--out", help="output directory (default cgd-out; theory-check writes nothing unless given)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--quiet", action="store_true")
    return p


def _out(args):
    path = args.out or "cgd-out"
    os.makedirs(path, exist_ok=True)
    return path


def build_parser():
    common = _common()
    parser = _Parser(prog="cgd", description="Compression-based gradient descent experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="run C-GD trials from a config")
    sub.add_parser("sweep", parents=[common], help="grid over sampling ratio and SNR")
    p = sub.add_parser("project", parents=[common], help="project a signal file onto a code")
    p.add_argument("input", help=".f64v or .pgm signal")
    sub.add_parser("csp", parents=[common], help="exhaustive codebook search vs C-GD")
    p = sub.add_parser("theory-check", parents=[common], help="Monte-Carlo check of a tail bound")
    p.add_argument("check", help=f"one of {', '.join(sorted(CHECKS))}")
    p.add_argument("params", nargs="*", help="key=value parameters")
    p.add_argument("--trials", type=int, default=1000)
    return parser


def _say(args, text):
    if not args.quiet:
        print(text)


def _config(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    return ex.load_config(args.config, args.seed)


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args):
    cfg = _config(args)
    out = _out(args)
    results = ex.run_trials(cfg, args.jobs)
    for r in results:
        with open(os.path.join(out, f"trace_{r['trial']:04d}.csv"), "w", newline="") as fh:
            fh.write(r["trace_csv"])
    summary = ex.summarize(cfg, results)
    _dump(os.path.join(out, "summary.json"), summary)
    agg = summary["aggregate"]
    _say(args, f"{len(results)} trials  psnr_mean={agg['psnr_mean']:.4f} dB  "
               f"iterations_mean={agg['iterations_mean']:.2f}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    out = _out(args)
    rows = ex.sweep_rows(cfg, args.jobs)
    path = os.path.join(out, "sweep.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("ratio", "snr_db", "trial", "psnr", "iters", "stop_reason"))
        w.writerows(rows)
    cells = {}
    for ratio, snr, _, psnr, _, _ in rows:
        cells.setdefault((ratio, snr), []).append(float(psnr))
    report = [{"ratio": r, "snr_db": s, "psnr_mean": float(np.mean(v))} for (r, s), v in cells.items()]
    _dump(os.path.join(out, "sweep_summary.json"), {"master_seed": cfg.seed, "cells": report})
    for c in report:
        _say(args, f"ratio={c['ratio']} snr_db={c['snr_db']} psnr_mean={c['psnr_mean']:.4f}")
    return EXIT_OK


def cmd_project(args):
    cfg = _config(args)
    x = read_signal(args.input)
    code = ex.build_code(cfg.code, x.size)
    stream = code.encode(x)
    xhat = code.decode(stream)
    again = code.encode(xhat)
    distortion = float(np.linalg.norm(x - xhat))
    bound = code.distortion_bound
    out = _out(args)
    write_f64v(os.path.join(out, "projected.f64v"), xhat)
    record = {
        "input": args.input,
        "n": int(x.size),
        "code": code.describe(),
        "bits": len(stream),
        "payload_bits": code.rate_bits,
        "distortion": distortion,
        "distortion_bound": bound if math.isfinite(bound) else None,
        "within_bound": bool(distortion <= bound),
        "idempotent": again == stream,
    }
    _dump(os.path.join(out, "project.json"), record)
    _say(args, f"bits={record['bits']} distortion={distortion!r} bound={bound!r} "
               f"within_bound={record['within_bound']} idempotent={record['idempotent']}")
    return EXIT_OK


def cmd_csp(args):
    cfg = _config(args)
    n = ex.signal_length(cfg)
    code = ex.build_code(cfg.code, n)
    book = enumerate_codebook(code)
    out = _out(args)
    rows = []
    for t in range(cfg.trials):
        if cfg.signal["kind"] == "file":
            x = ex._load_file(cfg)
        else:
            x = ex.generate_signal(cfg.signal, derive_seed(cfg.seed, t, 0))
        m = ex.resolve_m(cfg.operator, n)
        op = sample_operator(cfg.operator["kind"], m, n, cfg.operator.get("sigma_a", 1.0),
                             derive_seed(cfg.seed, t, 1))
        y, _ = add_noise_at_snr(op.apply(x), NoiseSpec(cfg.noise_snr_db, derive_seed(cfg.seed, t, 2)))
        _, csp_res = csp_exhaustive(y, op, book)
        cgd_res = cgd_run(y, op, code, cfg.solver).trace.residual[-1]
        rows.append((t, repr(csp_res), repr(cgd_res), csp_res <= cgd_res))
    with open(os.path.join(out, "csp.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("trial", "csp_residual", "cgd_residual", "csp_le_cgd"))
        w.writerows(rows)
    _say(args, f"codebook size {len(book)}; CSP residual <= C-GD residual in "
               f"{sum(r[3] for r in rows)}/{len(rows)} trials")
    return EXIT_OK


def _parse_params(items):
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                raise ConfigError(f"parameter {key} is not a number: {value!r}") from None
    return out


def cmd_theory(args):
    if args.check not in CHECKS:
        print(f"unknown check {args.check!r}; expected one of {sorted(CHECKS)}", file=sys.stderr)
        return EXIT_CONFIG
    params = _parse_params(args.params)
    trials = params.pop("trials", args.trials)
    report = tail_check(args.check, params, trials, args.seed or 0)
    text = json.dumps(report.as_dict(), sort_keys=True)
    _say(args, text)
    if args.out:
        out = _out(args)
        _dump(os.path.join(out, f"{args.check}.json"), report.as_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "project": cmd_project,
    "csp": cmd_csp,
    "theory-check": cmd_theory,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CodecAdapterError as exc:
        print(f"codec error: {exc}\n{json.dumps(exc.diagnostics, default=str, indent=2)}", file=sys.stderr)
        return EXIT_CODEC
    except DimensionError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (OSError, DecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, CGDError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
