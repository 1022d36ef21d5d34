"""Scaled gradient descent with line search, plus the baseline optimizers.

Every driver returns a :class:`~hessgd.trace.Trace`. Guarded methods (scaled
GD, line-search GD, PoNo) carry ``f(x_k)`` over from the accepted line-search
trial, so only the initial point pays a standalone value evaluation. Unguarded
methods (fixed step, momentum, Adam) bill an objective evaluation every
``log_stride`` iterations for the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import HessGDError, NumericalFailure
from .linesearch import ArmijoParams, backtrack, forward_track
from .oracle import (
    OracleCounter,
    Problem,
    as_param,
    eval_gradient,
    eval_hvp,
    eval_value,
    eval_value_unchecked,
)
from .scaling import (
    AlternationState,
    CurvatureProbe,
    Flag,
    Rule,
    ScalingConfig,
    select_scaling,
    spc_scaling,
)
from .trace import IterateRecord, RunConfig, Status, Trace

DIVERGENCE_WINDOW = 50

# curvature(x, g, counter) -> H(x) g, billed by the callee
Curvature = Callable[[np.ndarray, np.ndarray, OracleCounter], np.ndarray]


def _exact_curvature(problem: Problem) -> Curvature:
    def hg(x, g, counter):
        return eval_hvp(problem, x, g, counter)

    return hg


def _terminal(records, k, f, gnorm, counter):
    records.append(IterateRecord(k, f, gnorm, 0.0, 0.0, Flag.NONE, 0, counter.units))


def _out_of_budget(counter, k, run):
    return counter.units >= run.max_units or k >= run.max_iters


def wolfe_diagnostic(x_next_grad: np.ndarray, p: np.ndarray, g: np.ndarray, eta: float) -> bool:
    """Curvature condition ``<g(x + alpha p), p> >= eta <g, p>``; diagnostic only."""
    return float(np.dot(x_next_grad, p)) >= eta * float(np.dot(g, p))


def scaled_gd(
    problem: Problem,
    scaling: ScalingConfig | None = None,
    armijo: ArmijoParams | None = None,
    run: RunConfig | None = None,
    *,
    x0=None,
    curvature: Curvature | None = None,
    name: str | None = None,
) -> Trace:
    """Hessian-aware scaled gradient descent.

    SPC/LPC steps backtrack from ``alpha = 1``; NC steps forward-track from
    ``alpha = 1``. ``curvature`` replaces the exact ``Hg`` product, e.g. with a
    subsampled estimate.
    """
    scaling = scaling or ScalingConfig()
    armijo = armijo or ArmijoParams()
    run = run or RunConfig()
    if armijo.alpha0 != 1.0:
        raise ValueError("scaled gradient descent starts every line search at alpha0 = 1")
    curvature = curvature or _exact_curvature(problem)
    trace = Trace(method=name or scaling.spc_rule.value)
    counter = trace.counter
    records = trace.records
    state = AlternationState.for_rule(scaling.spc_rule)

    x = as_param(problem.x0 if x0 is None else x0, problem.dim)
    k = 0
    try:
        f = eval_value(problem, x, counter)
        while True:
            g = eval_gradient(problem, x, counter)
            gnorm = float(np.linalg.norm(g))
            if gnorm < run.eps_g:
                trace.status = Status.CONVERGED
                break
            if _out_of_budget(counter, k, run):
                trace.status = Status.BUDGET_EXHAUSTED
                break
            hg = curvature(x, g, counter)
            probe = CurvatureProbe.from_vectors(g, hg)
            dec = select_scaling(probe, scaling, state)
            dirderiv = -dec.s * probe.gnorm2
            search = forward_track if dec.flag is Flag.NC else backtrack
            ls = search(problem, x, dec.p, f, dirderiv, armijo, counter)
            x_new = x + ls.alpha * dec.p

            wolfe = None
            if run.wolfe_eta is not None:
                g_new = eval_gradient(problem, x_new, counter)
                wolfe = wolfe_diagnostic(g_new, dec.p, g, run.wolfe_eta)
            pnorm = dec.s * math.sqrt(probe.gnorm2)
            sod = dec.second_order_residual(probe) / (gnorm * pnorm)
            records.append(
                IterateRecord(
                    k, f, gnorm, dec.s, ls.alpha, dec.flag, ls.trials, counter.units,
                    wolfe_eta_holds=wolfe, sod_ratio=sod, rule=dec.rule_used,
                )
            )
            x, f = x_new, ls.f_new
            k += 1
        _terminal(records, k, f, gnorm, counter)
    except HessGDError as exc:
        trace.status = Status.FAILED
        trace.message = f"{type(exc).__name__}: {exc}"
        trace.terminal = False
        trace.x = x
        exc.trace = trace
        raise
    trace.x = x
    return trace


def unit_step_iterates(problem: Problem, x0, rule: Rule | str, iters: int) -> np.ndarray:
    """``x_{k+1} = x_k - s_k g_k`` with ``alpha = 1`` and pure SPC scalings (no line search).

    Stops early if the gradient vanishes exactly. Returns the iterates stacked row-wise.
    """
    rule = Rule(rule)
    state = AlternationState.for_rule(rule)
    x = as_param(x0, problem.dim)
    out = [x]
    for _ in range(iters):
        g = np.asarray(problem.grad(x), dtype=np.float64)
        if not np.any(g):
            break
        probe = CurvatureProbe.from_vectors(g, np.asarray(problem.hvp(x, g), dtype=np.float64))
        if rule.alternating:
            r = state.next_spc_rule
            state.toggle()
        else:
            r = rule
        x = x - spc_scaling(probe, r) * g
        out.append(x)
    return np.array(out)


# --- baselines ---------------------------------------------------------------


class ResetScheme(str, Enum):
    NO_RESET = "none"
    FULL_RESET = "full"
    LIMITED_RESET = "limited"

    def __str__(self):
        return self.value


def vanilla_ls_gd(
    problem: Problem,
    reset: ResetScheme | str = ResetScheme.LIMITED_RESET,
    armijo: ArmijoParams | None = None,
    run: RunConfig | None = None,
    *,
    x0=None,
    alpha_init: float = 1.0,
    name: str | None = None,
) -> Trace:
    """Backtracking GD along ``-g``; ``reset`` chooses each search's initial step.

    ``none``: previous step. ``full``: ``alpha_init``. ``limited``: previous step
    divided by ``theta``. The step before the first iteration is taken as 1.
    """
    reset = ResetScheme(reset)
    armijo = armijo or ArmijoParams()
    run = run or RunConfig()
    trace = Trace(method=name or f"GD-LS({reset.value})")
    counter, records = trace.counter, trace.records
    x = as_param(problem.x0 if x0 is None else x0, problem.dim)
    prev_alpha = 1.0
    k = 0
    try:
        f = eval_value(problem, x, counter)
        while True:
            g = eval_gradient(problem, x, counter)
            gnorm = float(np.linalg.norm(g))
            if gnorm < run.eps_g:
                trace.status = Status.CONVERGED
                break
            if _out_of_budget(counter, k, run):
                trace.status = Status.BUDGET_EXHAUSTED
                break
            if reset is ResetScheme.NO_RESET:
                a0 = prev_alpha
            elif reset is ResetScheme.FULL_RESET:
                a0 = alpha_init
            else:
                a0 = prev_alpha / armijo.theta
            params = ArmijoParams(armijo.rho, armijo.theta, a0, armijo.max_trials)
            ls = backtrack(problem, x, -g, f, -gnorm * gnorm, params, counter)
            records.append(IterateRecord(k, f, gnorm, 0.0, ls.alpha, Flag.NONE, ls.trials, counter.units))
            x = x - ls.alpha * g
            f = ls.f_new
            prev_alpha = ls.alpha
            k += 1
        _terminal(records, k, f, gnorm, counter)
    except HessGDError as exc:
        trace.status = Status.FAILED
        trace.message = f"{type(exc).__name__}: {exc}"
        trace.terminal = False
        exc.trace = trace
        raise
    trace.x = x
    return trace


@dataclass(frozen=True)
class PoNoParams:
    """Deterministic Polyak-initialised non-monotone line search.

    ``c`` sufficient-decrease constant, ``c_p`` Polyak scaling, ``xi`` memory of
    the averaged reference value, ``alpha_max`` cap on the initial step.
    """

    f_star: float = 0.0
    c: float = 0.5
    c_p: float = 0.5
    theta: float = 0.5
    xi: float = 1.0
    alpha_max: float = 10.0
    max_trials: int = 60


def polyak_ratio(f: float, f_star: float, gnorm2: float) -> float:
    return (f - f_star) / gnorm2


def pono_ls(
    problem: Problem,
    run: RunConfig | None = None,
    params: PoNoParams | None = None,
    *,
    x0=None,
    name: str = "PoNo",
) -> Trace:
    run = run or RunConfig()
    params = params or PoNoParams()
    trace = Trace(method=name)
    counter, records = trace.counter, trace.records
    x = as_param(problem.x0 if x0 is None else x0, problem.dim)
    k = 0
    try:
        f = eval_value(problem, x, counter)
        ref, q = f, 1.0
        prev_f = f
        while True:
            g = eval_gradient(problem, x, counter)
            gnorm2 = float(np.dot(g, g))
            gnorm = math.sqrt(gnorm2)
            if gnorm < run.eps_g or gnorm2 < 1e-300:
                trace.status = Status.CONVERGED
                break
            if _out_of_budget(counter, k, run):
                trace.status = Status.BUDGET_EXHAUSTED
                break
            ratio = polyak_ratio(f, params.f_star, gnorm2)
            if ratio <= 0.0:
                trace.status = Status.CONVERGED
                trace.message = "objective reached the supplied lower bound"
                break
            alpha = min(ratio / params.c_p, params.alpha_max)
            bound = max(ref, f)
            trials = 0
            while True:
                f_new = eval_value_unchecked(problem, x - alpha * g, counter)
                trials += 1
                if f_new <= bound - params.c * alpha * gnorm2:
                    break
                if trials >= params.max_trials:
                    raise NumericalFailure(f"non-monotone search stalled after {trials} trials", x)
                alpha *= params.theta
            records.append(
                IterateRecord(
                    k, f, gnorm, 0.0, alpha, Flag.NONE, trials, counter.units,
                    nonmonotone=k > 0 and f > prev_f,
                )
            )
            x = x - alpha * g
            prev_f, f = f, f_new
            q_new = params.xi * q + 1.0
            ref = (params.xi * q * ref + f) / q_new
            q = q_new
            k += 1
        _terminal(records, k, f, gnorm, counter)
        records[-1].nonmonotone = k > 0 and f > prev_f
    except HessGDError as exc:
        trace.status = Status.FAILED
        trace.message = f"{type(exc).__name__}: {exc}"
        trace.terminal = False
        exc.trace = trace
        raise
    trace.x = x
    return trace


def _unguarded(problem, run, x0, name, step) -> Trace:
    """Shared loop for methods without a line search.

    ``step(x, g, k) -> (x_new, alpha)``. Non-finite values or
    ``DIVERGENCE_WINDOW`` consecutive increases of the logged objective end the
    run with status Diverged.
    """
    trace = Trace(method=name)
    counter, records = trace.counter, trace.records
    x = as_param(problem.x0 if x0 is None else x0, problem.dim)
    k = 0
    increases = 0
    last_f = None
    f = gnorm = math.nan
    try:
        while True:
            g = eval_gradient(problem, x, counter)
            gnorm = float(np.linalg.norm(g))
            done = gnorm < run.eps_g or _out_of_budget(counter, k, run)
            f = math.nan
            if k % run.log_stride == 0 or done:
                f = eval_value(problem, x, counter)
                if last_f is not None and f > last_f:
                    increases += 1
                else:
                    increases = 0
                last_f = f
            if gnorm < run.eps_g:
                trace.status = Status.CONVERGED
                break
            if done:
                trace.status = Status.BUDGET_EXHAUSTED
                break
            if increases >= DIVERGENCE_WINDOW:
                trace.status = Status.DIVERGED
                trace.message = f"objective increased {increases} consecutive times"
                break
            x_new, alpha = step(x, g, k)
            records.append(IterateRecord(k, f, gnorm, 0.0, alpha, Flag.NONE, 0, counter.units))
            x = x_new
            k += 1
    except NumericalFailure as exc:
        trace.status = Status.DIVERGED
        trace.message = str(exc)
        f = math.nan
        gnorm = math.nan
    _terminal(records, k, f, gnorm, counter)
    trace.x = x
    return trace


def fixed_gd(problem: Problem, alpha: float, run: RunConfig | None = None, *, x0=None, name="Fixed") -> Trace:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")

    def step(x, g, k):
        return x - alpha * g, alpha

    return _unguarded(problem, run or RunConfig(), x0, name, step)


@dataclass(frozen=True)
class MomentumParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")


def compute_theory_params(mu: float, L: float) -> dict[str, MomentumParams]:
    """Textbook step/momentum for ``mu``-strongly convex, ``L``-smooth problems."""
    sl, sm = math.sqrt(L), math.sqrt(mu)
    kappa_root = math.sqrt(L / mu)
    return {
        "heavy_ball": MomentumParams(4.0 / (sl + sm) ** 2, ((sl - sm) / (sl + sm)) ** 2),
        "nesterov": MomentumParams(1.0 / L, (kappa_root - 1.0) / (kappa_root + 1.0)),
    }


def _momentum(problem, params, run, x0, name, nesterov):
    v = None

    def step(x, g, k):
        nonlocal v
        if v is None:
            v = np.zeros_like(x)
        v = params.beta * v - params.alpha * g
        if nesterov:
            return x - params.alpha * g + params.beta * v, params.alpha
        return x + v, params.alpha

    return _unguarded(problem, run or RunConfig(), x0, name, step)


def heavy_ball(problem: Problem, params: MomentumParams, run: RunConfig | None = None, *, x0=None, name="HeavyBall") -> Trace:
    return _momentum(problem, params, run, x0, name, nesterov=False)


def nesterov(problem: Problem, params: MomentumParams, run: RunConfig | None = None, *, x0=None, name="Nesterov") -> Trace:
    return _momentum(problem, params, run, x0, name, nesterov=True)


def adam(
    problem: Problem,
    lr: float,
    run: RunConfig | None = None,
    *,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    x0=None,
    name="Adam",
) -> Trace:
    if not lr > 0:
        raise ValueError("lr must be > 0")
    m = v = None

    def step(x, g, k):
        nonlocal m, v
        if m is None:
            m = np.zeros_like(x)
            v = np.zeros_like(x)
        t = k + 1
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        mhat = m / (1.0 - beta1**t)
        vhat = v / (1.0 - beta2**t)
        return x - lr * mhat / (np.sqrt(vhat) + eps), lr

    return _unguarded(problem, run or RunConfig(), x0, name, step)
