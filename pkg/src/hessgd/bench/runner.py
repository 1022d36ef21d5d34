"""Build problems and optimizers from a config, run the matrix, tune grids."""

from __future__ import annotations

import copy
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from ..errors import ConfigError, HessGDError, ParseError, TuningFailed
from ..inexact import SubsampleConfig, SubsampledCurvature
from ..linesearch import ArmijoParams
from ..optimizers import (
    MomentumParams,
    PoNoParams,
    adam,
    compute_theory_params,
    fixed_gd,
    heavy_ball,
    nesterov,
    pono_ls,
    scaled_gd,
    vanilla_ls_gd,
)
from ..problems import (
    LogisticProblem,
    Quartic1D,
    Rosenbrock2D,
    SyntheticSpec,
    gen_synthetic_classification,
    load_libsvm,
    logistic_spectrum_bound,
    random_quadratic_sum,
    random_spd_quadratic,
)
from ..scaling import Rule, ScalingConfig
from ..trace import RunConfig, Status, Trace
from .config import ExperimentConfig, MethodSpec
from .traces import SummaryRow, emit_trace, summarize, write_summary

log = logging.getLogger(__name__)

# momentum used when no theoretical value is available
DEFAULT_BETA = 0.9


def build_problem(spec: dict, seed: int = 0):
    """Instantiate the ``[problem]`` section; ``seed`` drives randomly generated data."""
    p = dict(spec)
    kind = p.pop("kind")
    if kind == "logistic":
        return gen_synthetic_classification(
            SyntheticSpec(
                n=p.get("n", 500), d=p.get("d", 20), C=p.get("classes", 3),
                separation=p.get("separation", 1.0), seed=seed, lam=p.get("lam", 1e-3),
                feature_spread=p.get("feature_spread", 1.0),
            )
        )
    if kind == "libsvm":
        return load_libsvm(p["path"], p.get("n_features"), lam=p.get("lam", 1e-3), strict=p.get("strict", True))
    if kind == "quadratic":
        return random_spd_quadratic(p.get("d", 10), seed, mu=p.get("mu", 1.0), L=p.get("L", 100.0), with_linear=p.get("linear", True))
    if kind == "quadratic-sum":
        return random_quadratic_sum(p.get("n", 10), p.get("d", 5), seed, spread=p.get("spread", 1.0))
    if kind == "quartic1d":
        return Quartic1D()
    if kind == "rosenbrock2d":
        return Rosenbrock2D()
    raise ConfigError(f"problem.kind: unknown problem {kind!r}")


@lru_cache(maxsize=8)
def _cached_problem(items: tuple, seed: int):
    return build_problem(dict(items), seed)


def get_problem(spec: dict, seed: int):
    return _cached_problem(tuple(sorted(spec.items())), seed)


def curvature_bounds(problem) -> tuple[float, float]:
    """``(mu, L)``: exact when the problem knows them, else the logistic spectrum bound."""
    if isinstance(problem, LogisticProblem):
        return logistic_spectrum_bound(problem)
    if problem.mu is None or problem.L is None or not problem.mu > 0:
        raise ConfigError(f"theory parameters need known mu > 0 and L for problem {problem.name!r}")
    return problem.mu, problem.L


def _run_config(cfg: ExperimentConfig, seed: int) -> RunConfig:
    return RunConfig(
        eps_g=cfg.eps_g, max_units=cfg.max_units, max_iters=cfg.max_iters,
        seed=seed, log_stride=cfg.log_stride, wolfe_eta=cfg.wolfe_eta,
    )


def _armijo(params: dict) -> ArmijoParams:
    return ArmijoParams(
        rho=params.get("rho", 1e-4), theta=params.get("theta", 0.5),
        max_trials=params.get("max_trials", 60),
    )


def _scaling(spec: MethodSpec, problem) -> ScalingConfig:
    p = spec.params
    convex = problem.mu is not None and problem.mu > 0
    # strongly convex problems default to sigma = 0, everything else to 1e-6
    sigma = p.get("sigma", 0.0 if convex else 1e-6)
    strongly = False
    if sigma == 0.0:
        if problem.mu is None or not problem.mu > 0:
            raise ConfigError(f"method.{spec.label}.sigma: 0 is only allowed on strongly convex problems")
        strongly = True
    return ScalingConfig(
        sigma=sigma, s_lpc=p.get("s_lpc"), s_nc=p.get("s_nc", 1.0),
        spc_rule=Rule(p["rule"]), strongly_convex=strongly,
    )


def _momentum_params(spec: MethodSpec, problem, key: str) -> MomentumParams:
    p = spec.params
    alpha, beta = p["alpha"], p["beta"]
    if alpha == "theory" or beta == "theory":
        try:
            theory = compute_theory_params(*curvature_bounds(problem))[key]
        except ConfigError:
            if alpha == "theory":
                raise
            theory = MomentumParams(alpha, DEFAULT_BETA)
        alpha = theory.alpha if alpha == "theory" else alpha
        beta = theory.beta if beta == "theory" else beta
    return MomentumParams(alpha, beta)


def run_method(spec: MethodSpec, problem, run: RunConfig) -> Trace:
    """Run one optimizer; raises :class:`HessGDError` (with ``.trace``) on failure."""
    p = spec.params
    kind = spec.kind
    if kind == "scaled":
        return scaled_gd(problem, _scaling(spec, problem), _armijo(p), run, name=spec.label)
    if kind == "scaled-inexact":
        if not hasattr(problem, "hvp_subset"):
            raise ConfigError(f"method.{spec.label}.id: scaled-inexact needs a finite-sum problem")
        sub = SubsampleConfig(
            delta=p.get("delta", 0.1), delta_h=p.get("delta_h", 0.5),
            batch=p.get("batch", "auto"), seed=run.seed,
        )
        curv = SubsampledCurvature(problem, sub)
        return scaled_gd(problem, _scaling(spec, problem), _armijo(p), run, curvature=curv, name=spec.label)
    if kind == "gd-ls":
        return vanilla_ls_gd(
            problem, p.get("reset", "limited"), _armijo(p), run,
            alpha_init=p.get("alpha_init", 1.0), name=spec.label,
        )
    if kind == "fixed":
        alpha = p["alpha"]
        if alpha == "theory":
            alpha = 1.0 / curvature_bounds(problem)[1]
        return fixed_gd(problem, alpha, run, name=spec.label)
    if kind == "heavy-ball":
        return heavy_ball(problem, _momentum_params(spec, problem, "heavy_ball"), run, name=spec.label)
    if kind == "nesterov":
        return nesterov(problem, _momentum_params(spec, problem, "nesterov"), run, name=spec.label)
    if kind == "adam":
        return adam(
            problem, p["lr"], run, beta1=p.get("beta1", 0.9), beta2=p.get("beta2", 0.999),
            eps=p.get("eps", 1e-8), name=spec.label,
        )
    if kind == "pono":
        fields = {k: p[k] for k in ("f_star", "c", "c_p", "theta", "xi", "alpha_max", "max_trials") if k in p}
        return pono_ls(problem, run, PoNoParams(**fields), name=spec.label)
    raise ConfigError(f"method.{spec.label}.id: unknown method {kind!r}")


def trace_path(out_dir, label: str, seed: int) -> Path:
    return Path(out_dir) / f"{label}_seed{seed}.csv"


def run_one(cfg: ExperimentConfig, spec: MethodSpec, seed: int, out_dir) -> SummaryRow:
    """Run and write a single (method, seed) trace; failures become status Failed."""
    problem = get_problem(cfg.problem, seed)
    try:
        trace = run_method(spec, problem, _run_config(cfg, seed))
    except HessGDError as exc:
        trace = exc.trace or Trace(method=spec.label, status=Status.FAILED, terminal=False)
        trace.status = Status.FAILED
        trace.message = trace.message or f"{type(exc).__name__}: {exc}"
        log.error("%s seed %d failed: %s", spec.label, seed, trace.message)
    emit_trace(trace, trace_path(out_dir, spec.label, seed), wolfe=cfg.wolfe_eta is not None, second_order=cfg.second_order)
    return summarize(trace.records, spec.label, seed, trace.status, trace.terminal)


def validate(cfg: ExperimentConfig) -> None:
    """Everything that can fail before a run starts: problems, theory parameters, sigma."""
    for seed in cfg.seeds:
        try:
            problem = get_problem(cfg.problem, seed)
        except ParseError as exc:
            raise ConfigError(f"problem.path: {exc}") from None
        except (ValueError, OSError) as exc:
            raise ConfigError(f"problem: {exc}") from None
        for spec in cfg.methods:
            if spec.kind in ("scaled", "scaled-inexact"):
                _scaling(spec, problem)
            if spec.kind == "scaled-inexact" and not hasattr(problem, "hvp_subset"):
                raise ConfigError(f"method.{spec.label}.id: scaled-inexact needs a finite-sum problem")
            if spec.params.get("alpha") == "theory":
                curvature_bounds(problem)


def _task(args):
    cfg, spec, seed, out_dir = args
    return run_one(cfg, spec, seed, out_dir)


@dataclass
class ExperimentResult:
    output_dir: Path
    rows: list[SummaryRow]
    trace_files: list[Path]
    summary_file: Path

    @property
    def failed(self) -> bool:
        return any(r.status == Status.FAILED.value for r in self.rows)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """One CSV per (method, seed) plus ``summary.csv``; identical output for any worker count."""
    if not cfg.methods:
        raise ConfigError("method: at least one [method.NAME] section is required")
    validate(cfg)
    out_dir = Path(cfg.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output.dir: cannot create {out_dir}: {exc.strerror}") from None
    tasks = [(cfg, spec, seed, out_dir) for spec in cfg.methods for seed in cfg.seeds]
    workers = cfg.workers if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            rows = list(pool.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    summary = write_summary(rows, out_dir / "summary.csv")
    files = [trace_path(out_dir, spec.label, seed) for _, spec, seed, _ in tasks]
    return ExperimentResult(out_dir, rows, files, summary)


# --- grid tuning ---------------------------------------------------------------


@dataclass
class TunePoint:
    value: float
    status: str
    final_f: float
    units: float


@dataclass
class TuneResult:
    method: str
    param: str
    best: float
    points: list[TunePoint] = field(default_factory=list)

    @property
    def total_units(self) -> float:
        return sum(p.units for p in self.points)


def _rank(point: TunePoint):
    # runs that reached eps_g tie on the objective up to termination noise, so
    # among them the cheaper one wins; otherwise the lowest final objective
    if point.status == Status.CONVERGED.value:
        return (0, point.units, point.final_f)
    return (1, point.final_f, point.units)


def tune_grid(cfg: ExperimentConfig, method: str, grid, param: str | None = None, seed: int | None = None) -> TuneResult:
    """Run every grid value under the shared budget and pick the best survivor.

    Diverged and Failed runs are discarded. Every run's units count toward
    :attr:`TuneResult.total_units`, discarded ones included.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ConfigError("tune.grid: must list at least one value")
    base = cfg.method(method)
    if param is None:
        param = "lr" if base.kind == "adam" else "alpha"
    seed = cfg.seeds[0] if seed is None else seed
    problem = get_problem(cfg.problem, seed)
    run = _run_config(cfg, seed)
    points = []
    for value in grid:
        spec = copy.deepcopy(base)
        spec.params[param] = value
        try:
            trace = run_method(spec, problem, run)
            status = trace.status
        except HessGDError as exc:
            trace = exc.trace
            status = Status.FAILED
        final_f = trace.final.f if trace and trace.records else math.nan
        units = trace.counter.units if trace else 0.0
        points.append(TunePoint(value, str(status), final_f, units))
    survivors = [
        p for p in points
        if p.status not in (Status.DIVERGED.value, Status.FAILED.value) and math.isfinite(p.final_f)
    ]
    if not survivors:
        raise TuningFailed(f"every grid point for {method}.{param} diverged or failed")
    best = min(survivors, key=_rank)
    return TuneResult(method, param, best.value, points)
