"""Command-line entry point: ``permcap <subcommand> ...``.

Exit codes: 0 success, 1 a validation or property check failed, 2 bad input.

Environment overrides for defaults: ``PERMCAP_THREADS``,
``PERMCAP_QUAD_REL_TOL``, ``PERMCAP_QUAD_ABS_TOL``.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import pipeline
from .errors import DomainError, IngestionError, PermcapError
from .estimators import Sided
from .sphere import QuadratureConfig

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _env(name, cast, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise InputError(f"environment variable {name}={raw!r} is invalid") from exc


def _float_list(text):
    """``"0.1,0.5"`` or ``"a..b:step"`` (inclusive)."""
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = (float(v) for v in span.split(".."))
        step = float(step) if step else 0.1
        k = int(np.floor((hi - lo) / step + 1e-9))
        return [round(lo + i * step, 12) for i in range(k + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    """``"20,70"``, ``"5..200"`` or ``"5..200:5"`` (inclusive)."""
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = (int(v) for v in span.split(".."))
        return list(range(lo, hi + 1, int(step) if step else 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _quad(args):
    rel = args.quad_rel_tol if args.quad_rel_tol is not None else _env("PERMCAP_QUAD_REL_TOL", float, 1e-10)
    abs_ = args.quad_abs_tol if args.quad_abs_tol is not None else _env("PERMCAP_QUAD_ABS_TOL", float, 1e-14)
    return QuadratureConfig(rel_tol=rel, abs_tol=abs_)


def _add_quad(p):
    p.add_argument("--quad-rel-tol", type=float, default=None, help="relative quadrature tolerance")
    p.add_argument("--quad-abs-tol", type=float, default=None, help="absolute quadrature tolerance")


def _add_sided(p, default="two", choices=("one", "two")):
    p.add_argument("--sided", choices=list(choices), default=default)


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(records, path, fmt, fields=None):
    fh, close = _open_out(path)
    try:
        pipeline.write_records(records, fh, fmt, fields)
    finally:
        if close:
            fh.close()


def build_parser():
    parser = argparse.ArgumentParser(prog="permcap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-estimate", help="estimate p-values for every gene set")
    p.add_argument("--matrix", required=True, help="TSV expression matrix")
    p.add_argument("--labels", required=True, help="CSV of sample,label")
    p.add_argument("--genesets", required=True, help="GMT gene-set collection")
    p.add_argument("--estimators", default="p1,p2,p3")
    _add_sided(p)
    p.add_argument("--with-rmse", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="add per-set wall time (not reproducible)")
    _add_quad(p)

    p = sub.add_parser("validate", help="compare formulas with Monte Carlo oracles")
    p.add_argument("--m0", type=int, required=True)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_float_list, default=[0.2, 0.5], help="rho values")
    _add_sided(p, "both", ("one", "two", "both"))
    p.add_argument("--out", default=None)
    _add_quad(p)

    p = sub.add_parser("sweep", help="moments along rho for balanced designs")
    p.add_argument("--m-grid", type=_int_list, default=[20, 70], help="group sizes m0 = m1")
    p.add_argument("--rho-grid", type=_float_list, default=None)
    _add_sided(p)
    p.add_argument("--cv-floor", type=float, default=1e-31,
                   help="smallest p2 at which the CV bound is enforced")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    _add_quad(p)

    p = sub.add_parser("bench-sim", help="simulation against exact permutation p-values")
    p.add_argument("--dist", choices=sorted(pipeline.DEFAULT_SHIFT), default="normal")
    p.add_argument("--shift", type=float, default=None)
    p.add_argument("--m0", type=int, default=10)
    p.add_argument("--m1", type=int, default=10)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    _add_sided(p)
    p.add_argument("--out", default=None, help="per-replicate table; summary goes to stdout")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    _add_quad(p)
    return parser


def _run_estimate(args):
    estimators = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    bad = [e for e in estimators if e not in ("p1", "p2", "p3")]
    if bad or not estimators:
        raise InputError(f"unknown estimators {bad}")
    threads = args.threads if args.threads is not None else _env("PERMCAP_THREADS", int, 1)
    if threads < 1:
        raise InputError("--threads must be >= 1")
    matrix = pipeline.read_expression_tsv(args.matrix)
    labels = pipeline.read_labels_csv(args.labels, matrix.samples)
    genesets = pipeline.read_gmt(args.genesets)
    records = pipeline.run_estimate(matrix, genesets, labels, estimators, Sided(args.sided),
                                    args.with_rmse, _quad(args), threads, args.timing)
    fields = pipeline.record_fields(estimators, args.with_rmse, args.timing)
    _emit(records, args.out, args.format, fields)
    return EXIT_OK


def _validate(args):
    sides = (Sided.ONE, Sided.TWO) if args.sided == "both" else (Sided(args.sided),)
    checks = pipeline.validate(args.m0, args.m1, args.draws, args.seed, tuple(args.grid),
                               _quad(args), sides)
    fh, close = _open_out(args.out)
    try:
        for c in checks:
            z = (c.formula - c.oracle) / c.se if c.se > 0 else 0.0
            fh.write(f"{'PASS' if c.passed else 'FAIL'} {c.suite:8s} {c.label:40s} "
                     f"formula={c.formula:.10g} oracle={c.oracle:.10g} se={c.se:.3g} z={z:+.2f}"
                     f"{'  ' + c.note if c.note else ''}\n")
        n_fail = sum(not c.passed for c in checks)
        fh.write(f"{len(checks) - n_fail}/{len(checks)} checks passed\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def _sweep(args):
    rows = pipeline.sweep(args.m_grid, args.rho_grid, Sided(args.sided), _quad(args))
    _emit(rows, args.out, args.format, pipeline.SWEEP_FIELDS)
    props = pipeline.sweep_properties(rows, Sided(args.sided), cv_floor=args.cv_floor)
    failed = False
    for name, ok, detail in props:
        tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        failed |= ok is False
        print(f"{tag} {name}: {detail}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _bench_sim(args):
    rows, summary = pipeline.bench_sim(args.dist, args.shift, args.m0, args.m1, args.reps,
                                       args.seed, Sided(args.sided), _quad(args))
    if args.out is not None:
        _emit(rows, args.out, args.format, list(rows[0].keys()) if rows else [])
    print(json.dumps({k: pipeline._json_value(v) for k, v in summary.items()}))
    return EXIT_OK


_COMMANDS = {"run-estimate": _run_estimate, "validate": _validate, "sweep": _sweep,
             "bench-sim": _bench_sim}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (InputError, IngestionError, DomainError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except PermcapError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
