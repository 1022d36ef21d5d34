"""Iterate records and run traces shared by every optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .oracle import OracleCounter
from .scaling import Flag


class Status(str, Enum):
    CONVERGED = "Converged"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    DIVERGED = "Diverged"
    FAILED = "Failed"

    def __str__(self):
        return self.value


@dataclass
class RunConfig:
    eps_g: float = 1e-4
    max_units: float = 1e5
    max_iters: int = 10**6
    seed: int = 0
    log_stride: int = 1
    wolfe_eta: float | None = None

    def __post_init__(self):
        if not self.eps_g > 0:
            raise ValueError("eps_g must be > 0")
        if not self.max_units > 0 or self.max_iters < 1:
            raise ValueError("budgets must be positive")
        if self.log_stride < 1:
            raise ValueError("log_stride must be >= 1")
        if self.wolfe_eta is not None and not 0 < self.wolfe_eta < 1:
            raise ValueError("wolfe_eta must lie in (0, 1)")


@dataclass
class IterateRecord:
    """State at ``x_k`` and the step taken from it; ``units`` is cumulative after the step.

    The terminal row of a trace has ``flag == NONE`` and ``alpha == 0``.
    """

    k: int
    f: float
    gnorm: float
    s: float
    alpha: float
    flag: Flag
    ls_trials: int
    units: float
    wolfe_eta_holds: bool | None = None
    sod_ratio: float | None = None
    rule: str = ""
    nonmonotone: bool = False


@dataclass
class Trace:
    method: str
    records: list[IterateRecord] = field(default_factory=list)
    status: Status = Status.CONVERGED
    x: np.ndarray | None = None
    counter: OracleCounter = field(default_factory=OracleCounter)
    message: str = ""
    terminal: bool = True

    @property
    def steps(self) -> list[IterateRecord]:
        """Rows that correspond to an actual step (terminal row excluded)."""
        return self.records[:-1] if self.terminal else list(self.records)

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> IterateRecord:
        return self.records[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])
