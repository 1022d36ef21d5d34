"""Curvature classification along the gradient and Hessian-aware scalings.

Given ``g`` and ``Hg`` the direction is always ``p = -s * g``; only the scalar
``s`` depends on the curvature regime:

* SPC  ``<g,Hg> > sigma ||g||^2``       -> CG, MR or GM scaling
* LPC  ``0 <= <g,Hg> <= sigma ||g||^2`` -> fixed ``s_lpc <= 1/sigma``
* NC   ``<g,Hg> < 0``                    -> fixed ``s_nc``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import ContractViolation, InternalContradiction

HG_UNDERFLOW = 1e-300


class Flag(str, Enum):
    SPC = "SPC"
    LPC = "LPC"
    NC = "NC"
    NONE = "NONE"

    def __str__(self):
        return self.value


class Rule(str, Enum):
    CG = "CG"
    MR = "MR"
    GM = "GM"
    CGMR = "CGMR"
    MRCG = "MRCG"

    def __str__(self):
        return self.value

    @property
    def alternating(self) -> bool:
        return self in (Rule.CGMR, Rule.MRCG)


@dataclass(frozen=True)
class CurvatureProbe:
    g: np.ndarray
    Hg: np.ndarray
    gHg: float
    gnorm2: float
    Hgnorm2: float

    @classmethod
    def from_vectors(cls, g: np.ndarray, Hg: np.ndarray) -> "CurvatureProbe":
        ghg, gg, hh = _kernels.curvature_reductions(g, Hg)
        if not gg > 0.0:
            raise ValueError("curvature probe requires a nonzero gradient")
        return cls(g=g, Hg=Hg, gHg=ghg, gnorm2=gg, Hgnorm2=hh)


@dataclass
class ScalingConfig:
    """``sigma == 0`` is only allowed for problems declared strongly convex."""

    sigma: float = 1e-6
    s_lpc: float | None = None
    s_nc: float = 1.0
    spc_rule: Rule = Rule.CGMR
    strongly_convex: bool = False

    def __post_init__(self):
        self.spc_rule = Rule(self.spc_rule)
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sigma == 0 and not self.strongly_convex:
            raise ValueError("sigma == 0 requires strongly_convex=True")
        if self.s_nc <= 0:
            raise ValueError("s_nc must be > 0")
        if self.sigma > 0:
            if self.s_lpc is None:
                self.s_lpc = 1.0 / self.sigma
            if not 0 < self.s_lpc <= 1.0 / self.sigma:
                raise ValueError("s_lpc must lie in (0, 1/sigma]")

    @classmethod
    def strongly_convex_mode(cls, rule: Rule | str = Rule.CGMR) -> "ScalingConfig":
        return cls(sigma=0.0, spc_rule=Rule(rule), strongly_convex=True)


@dataclass
class AlternationState:
    """Which SPC rule the next SPC step uses; toggled only on SPC steps."""

    next_spc_rule: Rule = Rule.CG

    @classmethod
    def for_rule(cls, rule: Rule | str) -> "AlternationState":
        rule = Rule(rule)
        return cls(Rule.MR if rule is Rule.MRCG else Rule.CG)

    def toggle(self) -> None:
        self.next_spc_rule = Rule.MR if self.next_spc_rule is Rule.CG else Rule.CG


@dataclass(frozen=True)
class ScalingDecision:
    flag: Flag
    s: float
    p: np.ndarray = field(repr=False)
    rule_used: str

    def second_order_residual(self, probe: CurvatureProbe) -> float:
        """``<g,p> + <p,Hp>`` in collinear form ``-s||g||^2 + s^2 <g,Hg>``."""
        return -self.s * probe.gnorm2 + self.s * self.s * probe.gHg


def classify_curvature(probe: CurvatureProbe, sigma: float) -> Flag:
    if probe.gHg > sigma * probe.gnorm2:
        return Flag.SPC
    if probe.gHg >= 0.0:
        return Flag.LPC
    return Flag.NC


def spc_scaling(probe: CurvatureProbe, rule: Rule | str) -> float:
    rule = Rule(rule)
    if probe.Hgnorm2 < HG_UNDERFLOW or probe.gHg <= 0.0:
        raise InternalContradiction(
            f"SPC scaling requested with <g,Hg>={probe.gHg!r}, ||Hg||^2={probe.Hgnorm2!r}"
        )
    if rule is Rule.CG:
        s = probe.gnorm2 / probe.gHg
    elif rule is Rule.MR:
        s = probe.gHg / probe.Hgnorm2
    elif rule is Rule.GM:
        s = math.sqrt(probe.gnorm2 / probe.Hgnorm2)
    else:
        raise ValueError(f"{rule} is not a single SPC rule")
    if not (math.isfinite(s) and s > 0):
        raise InternalContradiction(f"{rule} scaling is not finite and positive: {s!r}")
    return s


def select_scaling(probe: CurvatureProbe, config: ScalingConfig, state: AlternationState) -> ScalingDecision:
    flag = classify_curvature(probe, config.sigma)
    if flag is Flag.SPC:
        if config.spc_rule.alternating:
            rule = state.next_spc_rule
            state.toggle()
        else:
            rule = config.spc_rule
        s = spc_scaling(probe, rule)
        rule_used = rule.value
    else:
        if config.strongly_convex and config.sigma == 0:
            raise ContractViolation(
                f"{flag} curvature (<g,Hg>={probe.gHg!r}) on a problem declared strongly convex"
            )
        if flag is Flag.LPC:
            s = float(config.s_lpc)
            rule_used = "LPC"
        else:
            s = float(config.s_nc)
            rule_used = "NC"
    return ScalingDecision(flag=flag, s=s, p=-s * probe.g, rule_used=rule_used)
