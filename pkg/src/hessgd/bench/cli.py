"""``hessgd`` command line: ``run``, ``tune``, ``check`` and ``selftest``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, HessGDError, TuningFailed
from ..problems import grad_check, hvp_check
from .config import PROBLEM_KEYS, load_config
from .runner import build_problem, run_experiment, tune_grid
from .selftest import run_selftest
from .traces import fmt_real

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, workers=args.workers)
    for r in result.rows:
        print(f"{r.method:>16} seed={r.seed} {r.status:<15} f={r.final_f:.10g} gnorm={r.final_gnorm:.3g} units={r.units:g}")
    print(f"wrote {len(result.trace_files)} traces and {result.summary_file}")
    return EXIT_FAILURE if result.failed else EXIT_OK


def _cmd_tune(args) -> int:
    cfg = load_config(args.config)
    if cfg.tune is None:
        raise ConfigError("tune: section is missing")
    t = cfg.tune
    try:
        res = tune_grid(cfg, t.method, t.grid, param=t.param)
    except TuningFailed as exc:
        print(f"tuning failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"tune_{t.method}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([t.param, "status", "final_f", "units"])
        for p in res.points:
            w.writerow([fmt_real(p.value), p.status, fmt_real(p.final_f), fmt_real(p.units)])
    for p in res.points:
        print(f"{t.param}={p.value:<10g} {p.status:<15} f={p.final_f:.10g} units={p.units:g}")
    print(f"selected {t.param}={res.best:g}; tuning spent {res.total_units:g} units; wrote {path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    target = args.problem
    if target in PROBLEM_KEYS:
        if target == "libsvm":
            raise ConfigError("check: a libsvm problem needs a config file with problem.path")
        spec = {"kind": target}
    else:
        spec = load_config(target).problem
    problem = build_problem(spec, args.seed)
    rng = np.random.default_rng(args.seed)
    ok = True
    for i in range(args.points):
        x = problem.x0 + (0.0 if i == 0 else rng.standard_normal(problem.dim))
        v = rng.standard_normal(problem.dim)
        for label, rep in (("gradient", grad_check(problem, x, args.tol)), ("hvp", hvp_check(problem, x, v, args.tol))):
            print(f"[{'PASS' if rep.passed else 'FAIL'}] point {i} {label}: {rep}")
            ok &= rep.passed
    return EXIT_OK if ok else EXIT_FAILURE


def _cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest() else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hessgd", description="Hessian-aware scaled gradient descent benchmarks")
    ap.add_argument("-v", "--verbose", action="store_true", help="log line-search events")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every method and seed in a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=None, help="override run.workers")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("tune", help="grid-tune the method named in [tune]")
    p.add_argument("config")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("check", help="finite-difference check of gradient and HVP")
    p.add_argument("problem", help=f"a config file or one of: {', '.join(k for k in PROBLEM_KEYS if k != 'libsvm')}")
    p.add_argument("--points", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("selftest", help="run the built-in invariant suites")
    p.set_defaults(func=_cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HessGDError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
