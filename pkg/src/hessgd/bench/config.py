"""Experiment configuration files.

The format is INI (``configparser``) with ``;`` or ``#`` comments. Sections:

``[problem]``      problem kind and its parameters
``[run]``          stopping rules, seeds, worker count, trace stride
``[output]``       output directory, relative to the working directory
                   (``HESSGD_OUTPUT_DIR`` overrides it)
``[diagnostics]``  optional Wolfe check and second-order-descent column
``[method.NAME]``  one optimizer per section; NAME labels its trace files
``[tune]``         grid for ``hessgd tune``

Keys and values are checked on load; the runner then builds each problem
and checks method/problem compatibility before any run starts. Errors name
the offending field as ``section.key``.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..optimizers import ResetScheme
from ..scaling import Rule

OUTPUT_ENV = "HESSGD_OUTPUT_DIR"

PROBLEM_KEYS = {
    "logistic": {"n", "d", "classes", "separation", "lam", "feature_spread"},
    "libsvm": {"path", "lam", "n_features", "strict"},
    "quadratic": {"d", "mu", "L", "linear"},
    "quadratic-sum": {"n", "d", "spread"},
    "quartic1d": set(),
    "rosenbrock2d": set(),
}

_SCALED_KEYS = {"rule", "sigma", "s_lpc", "s_nc", "rho", "theta", "max_trials"}
METHOD_KEYS = {
    "scaled": _SCALED_KEYS,
    "scaled-inexact": _SCALED_KEYS | {"delta", "delta_h", "batch"},
    "gd-ls": {"reset", "rho", "theta", "max_trials", "alpha_init"},
    "fixed": {"alpha"},
    "heavy-ball": {"alpha", "beta"},
    "nesterov": {"alpha", "beta"},
    "adam": {"lr", "beta1", "beta2", "eps"},
    "pono": {"f_star", "c", "c_p", "theta", "xi", "alpha_max", "max_trials"},
}
# shorthand ids that are scaled GD with a fixed rule
RULE_IDS = {r.value.lower(): r for r in Rule}

_LABEL = re.compile(r"^[A-Za-z0-9_.+-]+$")


@dataclass
class MethodSpec:
    label: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class TuneSpec:
    method: str
    param: str
    grid: list[float]


@dataclass
class ExperimentConfig:
    problem: dict
    methods: list[MethodSpec]
    seeds: list[int] = field(default_factory=lambda: [0])
    eps_g: float = 1e-4
    max_units: float = 1e5
    max_iters: int = 10**6
    log_stride: int = 1
    workers: int = 1
    output_dir: str = "results"
    wolfe_eta: float | None = None
    second_order: bool = False
    tune: TuneSpec | None = None

    def method(self, label: str) -> MethodSpec:
        for m in self.methods:
            if m.label == label:
                return m
        raise ConfigError(f"tune.method: no method section named {label!r}")


def _num(path, raw, *, integer=False, positive=False, nonneg=False):
    try:
        val = int(raw) if integer else float(raw)
    except (TypeError, ValueError):
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{path}: expected {kind}, got {raw!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"{path}: must be finite")
    if positive and not val > 0:
        raise ConfigError(f"{path}: must be > 0")
    if nonneg and val < 0:
        raise ConfigError(f"{path}: must be >= 0")
    return val


def _bool(path, raw):
    low = str(raw).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{path}: expected a boolean, got {raw!r}")


def _unknown(section, got, allowed):
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"{section}.{extra[0]}: unknown key")


def _parse_problem(sec, base_dir: Path) -> dict:
    if sec is None:
        raise ConfigError("problem: section is missing")
    kind = sec.get("kind")
    if kind is None:
        raise ConfigError("problem.kind: required")
    if kind not in PROBLEM_KEYS:
        raise ConfigError(f"problem.kind: unknown problem {kind!r}")
    _unknown("problem", [k for k in sec if k != "kind"], PROBLEM_KEYS[kind])
    out: dict = {"kind": kind}
    ints = {"n", "d", "classes", "n_features"}
    for key, raw in sec.items():
        path = f"problem.{key}"
        if key in ("kind",):
            continue
        if key == "path":
            p = Path(raw)
            out[key] = str(p if p.is_absolute() else base_dir / p)
        elif key in ("strict", "linear"):
            out[key] = _bool(path, raw)
        elif key in ints:
            out[key] = _num(path, raw, integer=True, positive=True)
        elif key in ("lam", "spread"):
            out[key] = _num(path, raw, nonneg=True)
        else:
            out[key] = _num(path, raw, positive=True)
    if kind == "libsvm" and "path" not in out:
        raise ConfigError("problem.path: required for libsvm problems")
    if kind == "logistic" and out.get("classes", 3) < 2:
        raise ConfigError("problem.classes: need at least 2 classes")
    if kind == "quadratic" and out.get("mu", 1.0) > out.get("L", 100.0):
        raise ConfigError("problem.mu: must not exceed problem.L")
    if kind == "logistic" and out.get("feature_spread", 1.0) <= 0.1:
        raise ConfigError("problem.feature_spread: must exceed 0.1")
    return out


def _parse_method(name: str, sec) -> MethodSpec:
    section = f"method.{name}"
    if not _LABEL.match(name):
        raise ConfigError(f"{section}: label may only contain letters, digits and _.+-")
    kind = sec.get("id", name.lower())
    params: dict = {}
    if kind in RULE_IDS:
        params["rule"] = RULE_IDS[kind].value
        kind = "scaled"
    if kind not in METHOD_KEYS:
        raise ConfigError(f"{section}.id: unknown method {kind!r}")
    keys = [k for k in sec if k != "id"]
    _unknown(section, keys, METHOD_KEYS[kind])
    for key in keys:
        raw = sec[key]
        path = f"{section}.{key}"
        if key == "rule":
            try:
                params[key] = Rule(raw.upper()).value
            except ValueError:
                raise ConfigError(f"{path}: unknown rule {raw!r}") from None
        elif key == "reset":
            try:
                params[key] = ResetScheme(raw.lower()).value
            except ValueError:
                raise ConfigError(f"{path}: expected none, full or limited") from None
        elif key == "batch":
            params[key] = raw if raw == "auto" else _num(path, raw, integer=True, positive=True)
        elif key in ("alpha", "beta") and raw.strip().lower() == "theory":
            params[key] = "theory"
        elif key == "max_trials":
            params[key] = _num(path, raw, integer=True, positive=True)
        elif key in ("sigma", "rho", "f_star", "beta"):
            params[key] = _num(path, raw) if key == "f_star" else _num(path, raw, nonneg=True)
        else:
            params[key] = _num(path, raw, positive=True)
    if kind == "scaled" and "rule" not in params:
        params["rule"] = Rule.CGMR.value
    if kind == "scaled-inexact":
        params.setdefault("rule", Rule.CGMR.value)
    if kind == "adam" and "lr" not in params:
        raise ConfigError(f"{section}.lr: required for adam")
    if kind == "fixed" and "alpha" not in params:
        raise ConfigError(f"{section}.alpha: required (a number or 'theory')")
    if kind in ("heavy-ball", "nesterov"):
        params.setdefault("alpha", "theory")
        params.setdefault("beta", "theory")
    if "rho" in params and not params["rho"] < 0.5:
        raise ConfigError(f"{section}.rho: must lie in [0, 0.5)")
    for key in ("theta", "beta1", "beta2", "c", "c_p"):
        if key in params and not params[key] < 1:
            raise ConfigError(f"{section}.{key}: must lie in (0, 1)")
    if isinstance(params.get("beta"), float) and not params["beta"] < 1:
        raise ConfigError(f"{section}.beta: must lie in [0, 1)")
    if "delta" in params and not params["delta"] < 1:
        raise ConfigError(f"{section}.delta: must lie in (0, 1)")
    return MethodSpec(name, kind, params)


def _parse_tune(sec, methods) -> TuneSpec:
    label = sec.get("method")
    if label is None:
        raise ConfigError("tune.method: required")
    _unknown("tune", list(sec), {"method", "param", "grid"})
    match = [m for m in methods if m.label == label]
    if not match:
        raise ConfigError(f"tune.method: no method section named {label!r}")
    spec = match[0]
    default = {"adam": "lr"}.get(spec.kind, "alpha")
    param = sec.get("param", default)
    if param not in METHOD_KEYS[spec.kind]:
        raise ConfigError(f"tune.param: {spec.kind} has no parameter {param!r}")
    raw = sec.get("grid", "")
    items = [t for t in re.split(r"[,\s]+", raw.strip()) if t]
    if not items:
        raise ConfigError("tune.grid: must list at least one value")
    grid = [_num("tune.grid", t, positive=True) for t in items]
    return TuneSpec(label, param, grid)


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str  # keep ``L`` distinct from ``l``
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    known = {"problem", "run", "output", "diagnostics", "tune"}
    for name in cp.sections():
        if name not in known and not name.startswith("method."):
            raise ConfigError(f"{name}: unknown section")

    problem = _parse_problem(cp["problem"] if cp.has_section("problem") else None, Path(base_dir))
    methods = [_parse_method(name[len("method."):], cp[name]) for name in cp.sections() if name.startswith("method.")]
    if not methods:
        raise ConfigError("method: at least one [method.NAME] section is required")

    cfg = ExperimentConfig(problem=problem, methods=methods)
    if cp.has_section("run"):
        run = cp["run"]
        _unknown("run", list(run), {"seeds", "eps_g", "max_units", "max_iters", "log_stride", "workers"})
        if "seeds" in run:
            toks = [t for t in re.split(r"[,\s]+", run["seeds"].strip()) if t]
            if not toks:
                raise ConfigError("run.seeds: must list at least one seed")
            cfg.seeds = [_num("run.seeds", t, integer=True, nonneg=True) for t in toks]
            if len(set(cfg.seeds)) != len(cfg.seeds):
                raise ConfigError("run.seeds: duplicate seed")
        if "eps_g" in run:
            cfg.eps_g = _num("run.eps_g", run["eps_g"], positive=True)
        if "max_units" in run:
            cfg.max_units = _num("run.max_units", run["max_units"], positive=True)
        if "max_iters" in run:
            cfg.max_iters = _num("run.max_iters", run["max_iters"], integer=True, positive=True)
        if "log_stride" in run:
            cfg.log_stride = _num("run.log_stride", run["log_stride"], integer=True, positive=True)
        if "workers" in run:
            cfg.workers = _num("run.workers", run["workers"], integer=True, positive=True)
    if cp.has_section("output"):
        _unknown("output", list(cp["output"]), {"dir"})
        cfg.output_dir = cp["output"].get("dir", cfg.output_dir)
    if cp.has_section("diagnostics"):
        diag = cp["diagnostics"]
        _unknown("diagnostics", list(diag), {"wolfe_eta", "second_order"})
        if "wolfe_eta" in diag:
            eta = _num("diagnostics.wolfe_eta", diag["wolfe_eta"], positive=True)
            if not eta < 1:
                raise ConfigError("diagnostics.wolfe_eta: must lie in (0, 1)")
            cfg.wolfe_eta = eta
        if "second_order" in diag:
            cfg.second_order = _bool("diagnostics.second_order", diag["second_order"])
    if cp.has_section("tune"):
        cfg.tune = _parse_tune(cp["tune"], methods)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg.output_dir = env
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return parse_config(text, base_dir=path.parent)
