"""Armijo sufficient decrease with backward and forward/backward tracking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import LineSearchStall
from .oracle import OracleCounter, Problem, eval_value_unchecked

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArmijoParams:
    rho: float = 1e-4
    theta: float = 0.5
    alpha0: float = 1.0
    max_trials: int = 60

    def __post_init__(self):
        if not 0.0 <= self.rho < 0.5:
            raise ValueError("rho must lie in [0, 1/2)")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be > 0")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")


@dataclass
class LineSearchOutcome:
    alpha: float
    f_new: float
    trials: int
    accepted_first: bool
    growth_capped: bool = False
    history: list[tuple[float, float]] = field(default_factory=list, repr=False)


def armijo_holds(f0: float, f_trial: float, alpha: float, dirderiv: float, rho: float) -> bool:
    return f_trial <= f0 + rho * alpha * dirderiv


def _trial(problem, x, p, alpha, counter, history):
    f = eval_value_unchecked(problem, x + alpha * p, counter)
    history.append((alpha, f))
    return f


def _backtrack_from(problem, x, p, f0, dirderiv, params, counter, alpha, f_alpha, history):
    # f_alpha: value at the first trial, already evaluated and logged
    trials = 1
    while not armijo_holds(f0, f_alpha, alpha, dirderiv, params.rho):
        if trials >= params.max_trials:
            raise LineSearchStall(
                f"Armijo condition not met after {trials} trials (alpha={alpha:.3e})",
                alpha=alpha,
                f0=f0,
                f_trial=f_alpha,
                trials=trials,
            )
        alpha = params.theta * alpha
        f_alpha = _trial(problem, x, p, alpha, counter, history)
        trials += 1
    return LineSearchOutcome(
        alpha=alpha,
        f_new=f_alpha,
        trials=trials,
        accepted_first=trials == 1,
        history=history,
    )


def backtrack(
    problem: Problem,
    x: np.ndarray,
    p: np.ndarray,
    f0: float,
    dirderiv: float,
    params: ArmijoParams,
    counter: OracleCounter,
) -> LineSearchOutcome:
    """First ``alpha0 * theta**j`` satisfying Armijo. ``f0`` is not re-billed."""
    history: list[tuple[float, float]] = []
    alpha = params.alpha0
    f_alpha = _trial(problem, x, p, alpha, counter, history)
    return _backtrack_from(problem, x, p, f0, dirderiv, params, counter, alpha, f_alpha, history)


def forward_track(
    problem: Problem,
    x: np.ndarray,
    p: np.ndarray,
    f0: float,
    dirderiv: float,
    params: ArmijoParams,
    counter: OracleCounter,
) -> LineSearchOutcome:
    """Grow by ``1/theta`` while Armijo holds; fall back to backtracking otherwise.

    The returned step is the last passing trial, so ``alpha / theta`` was tested
    and failed unless ``growth_capped`` is set.
    """
    history: list[tuple[float, float]] = []
    alpha = params.alpha0
    f_alpha = _trial(problem, x, p, alpha, counter, history)
    if not armijo_holds(f0, f_alpha, alpha, dirderiv, params.rho):
        return _backtrack_from(problem, x, p, f0, dirderiv, params, counter, alpha, f_alpha, history)

    trials = 1
    while True:
        if trials >= params.max_trials:
            log.info("forward tracking capped at %d trials, alpha=%.3e", trials, alpha)
            return LineSearchOutcome(alpha, f_alpha, trials, True, growth_capped=True, history=history)
        nxt = alpha / params.theta
        f_nxt = _trial(problem, x, p, nxt, counter, history)
        trials += 1
        if not armijo_holds(f0, f_nxt, nxt, dirderiv, params.rho):
            return LineSearchOutcome(alpha, f_alpha, trials, True, history=history)
        alpha, f_alpha = nxt, f_nxt
