"""Finite-sum objectives with subsampled Hessian-vector products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure
from .oracle import OracleCounter, Problem


class FiniteSumProblem(Problem):
    """``f(x) = (1/n) sum_i f_i(x)``.

    Subclasses provide ``hvp_subset(x, v, idx)``: the mean of ``H_i(x) v`` over
    the multiset ``idx``. The per-component helpers default to it.
    """

    n: int

    def hvp_subset(self, x: np.ndarray, v: np.ndarray, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_subset(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def component_hvp(self, i: int, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.hvp_subset(x, v, np.array([i]))

    def component_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.grad_subset(x, np.array([i]))

    def estimate_l1max(self, x: np.ndarray) -> float:
        """``max_i ||H_i g|| / ||g||`` with ``g`` the full gradient at ``x``."""
        g = self.grad(x)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            raise ValueError("gradient vanishes at x; cannot estimate L1max")
        return max(float(np.linalg.norm(self.component_hvp(i, x, g))) for i in range(self.n)) / gn


def sample_size(l1max: float, delta: float, delta_h: float) -> int:
    """Minibatch size for which ``||(H~ - H) g|| <= delta_h ||g||`` holds w.p. ``>= 1 - delta``."""
    if not (l1max > 0 and delta_h > 0 and 0 < delta < 1):
        raise ValueError("need l1max > 0, delta_h > 0 and 0 < delta < 1")
    return math.ceil(l1max**2 * (1.0 + math.sqrt(8.0 * math.log(1.0 / delta))) ** 2 / delta_h**2)


def hessian_error_check(g, hg_exact, hg_tilde, delta_h: float) -> bool:
    """``|<g, (H - H~) g>| <= delta_h ||g||^2``."""
    g = np.asarray(g, dtype=np.float64)
    lhs = abs(float(np.dot(g, np.asarray(hg_exact) - np.asarray(hg_tilde))))
    return lhs <= delta_h * float(np.dot(g, g))


@dataclass
class SubsampleConfig:
    """``batch`` is an explicit size or ``"auto"`` (from :func:`sample_size`).

    ``l1max=None`` with ``batch="auto"`` estimates the bound at the start point.
    ``exhaustive`` uses every index exactly once (test-only).
    """

    delta: float = 0.1
    delta_h: float = 0.5
    batch: int | str = "auto"
    seed: int = 0
    l1max: float | None = None
    exhaustive: bool = False

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.delta_h > 0:
            raise ValueError("delta_h must be > 0")
        if self.batch != "auto" and int(self.batch) < 1:
            raise ValueError("batch must be >= 1")


def make_generator(seed: int) -> np.random.Generator:
    # Philox is counter-based: replaying a seed replays the draws exactly
    return np.random.Generator(np.random.Philox(seed))


def resolve_batch(problem: FiniteSumProblem, config: SubsampleConfig, x0=None) -> int:
    if config.exhaustive:
        return problem.n
    if config.batch != "auto":
        return int(config.batch)
    l1 = config.l1max
    if l1 is None:
        l1 = problem.estimate_l1max(problem.x0 if x0 is None else x0)
    return sample_size(l1, config.delta, config.delta_h)


def subsampled_hvp(
    problem: FiniteSumProblem,
    x: np.ndarray,
    v: np.ndarray,
    batch: int,
    rng: np.random.Generator | None,
    counter: OracleCounter,
) -> np.ndarray:
    """Mean of component HVPs over a uniform with-replacement sample.

    ``rng=None`` means exhaustive (each component once). Billed as
    ``batch / n`` of an exact HVP.
    """
    if rng is None:
        idx = np.arange(problem.n)
    else:
        idx = rng.integers(0, problem.n, size=batch)
    counter.bill_hvp(len(idx) / problem.n)
    out = np.asarray(problem.hvp_subset(x, v, idx), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite subsampled Hessian-vector product", x)
    return out


class SubsampledCurvature:
    """Drop-in ``curvature`` callable for :func:`hessgd.optimizers.scaled_gd`."""

    def __init__(self, problem: FiniteSumProblem, config: SubsampleConfig, x0=None):
        self.problem = problem
        self.config = config
        self.batch = resolve_batch(problem, config, x0)
        self.rng = None if config.exhaustive else make_generator(config.seed)

    def __call__(self, x, g, counter):
        return subsampled_hvp(self.problem, x, g, self.batch, self.rng, counter)
