"""Exception hierarchy shared by the oracle, scaling, line-search and driver layers."""

from __future__ import annotations

import numpy as np


class HessGDError(Exception):
    """Base class. Drivers attach the partial trace as ``.trace`` before re-raising."""

    trace = None


class NumericalFailure(HessGDError):
    def __init__(self, message: str, x: np.ndarray | None = None):
        super().__init__(message)
        self.x = None if x is None else np.array(x, copy=True)


class ZeroDirection(HessGDError):
    pass


class InternalContradiction(HessGDError):
    """Floating-point pathology, e.g. an SPC flag with a vanishing ``||Hg||``."""


class ContractViolation(HessGDError):
    """LPC/NC curvature met while the problem was declared strongly convex (sigma == 0)."""


class LineSearchStall(HessGDError):
    def __init__(self, message: str, alpha: float, f0: float, f_trial: float, trials: int):
        super().__init__(message)
        self.alpha = alpha
        self.f0 = f0
        self.f_trial = f_trial
        self.trials = trials


class ParseError(HessGDError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(HessGDError):
    pass


class TuningFailed(HessGDError):
    pass
