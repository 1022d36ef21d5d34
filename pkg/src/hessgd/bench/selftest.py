"""Quick invariant suites behind ``hessgd selftest``.

Each check returns ``(ok, detail)``. They are small versions of the property
tests so an installed copy can be sanity-checked without the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from ..inexact import sample_size
from ..linesearch import ArmijoParams, armijo_holds, backtrack
from ..optimizers import compute_theory_params, scaled_gd
from ..oracle import FunctionProblem, OracleCounter
from ..problems import Quartic1D, random_spd_matrix, random_spd_quadratic
from ..scaling import CurvatureProbe, Rule, ScalingConfig, spc_scaling


def check_scaling_order(trials: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 21))
        H = random_spd_matrix(d, rng, mu=10 ** rng.uniform(-3, 0), L=10 ** rng.uniform(0, 3))
        g = rng.standard_normal(d)
        probe = CurvatureProbe.from_vectors(g, H @ g)
        mr, gm, cg = (spc_scaling(probe, r) for r in (Rule.MR, Rule.GM, Rule.CG))
        if not mr <= gm * (1 + 1e-12) or not gm <= cg * (1 + 1e-12):
            return False, f"ordering broken: MR={mr} GM={gm} CG={cg}"
        worst = max(worst, abs(gm * gm - mr * cg) / (gm * gm))
    return worst <= 1e-12, f"max rel |GM^2 - MR*CG| = {worst:.2e}"


def check_unit_steps(problems: int = 5):
    for seed in range(problems):
        prob = random_spd_quadratic(10, seed, mu=1.0, L=50.0)
        for rule in Rule:
            tr = scaled_gd(prob, ScalingConfig(spc_rule=rule))
            if any(r.ls_trials != 1 for r in tr.steps):
                return False, f"seed {seed} rule {rule.value}: a step backtracked"
    return True, f"{problems} quadratics x {len(Rule)} rules, every step alpha = 1"


def check_armijo_grid(trials: int = 200, seed: int = 1):
    rng = np.random.default_rng(seed)
    params = ArmijoParams()
    for _ in range(trials):
        a, b = rng.uniform(0.1, 10), rng.uniform(-2, 2)
        prob = FunctionProblem(1, lambda x: 0.5 * a * x[0] ** 2 + b * math.sin(3 * x[0]), lambda x: np.array([a * x[0] + 3 * b * math.cos(3 * x[0])]))
        x = np.array([rng.uniform(-3, 3)])
        f0 = prob.value(x)
        g = prob.grad(x)
        if g[0] == 0:
            continue
        p = -g
        dd = float(g @ p)
        out = backtrack(prob, x, p, f0, dd, params, OracleCounter())
        expect = None
        for j in range(params.max_trials):
            alpha = params.theta**j
            if armijo_holds(f0, prob.value(x + alpha * p), alpha, dd, params.rho):
                expect = alpha
                break
        if expect != out.alpha:
            return False, f"backtrack alpha {out.alpha} != grid scan {expect}"
    return True, f"{trials} random instances agree with the grid scan"


def check_sample_size():
    n = sample_size(1.0, 1.0 / math.e, 1.0)
    return n == 15, f"sample_size(1, 1/e, 1) = {n}"


def check_theory_params():
    t = compute_theory_params(1.0, 4.0)
    hb, nv = t["heavy_ball"], t["nesterov"]
    ok = (
        math.isclose(hb.alpha, 4 / 9, rel_tol=1e-15) and math.isclose(hb.beta, 1 / 9, rel_tol=1e-15)
        and math.isclose(nv.alpha, 1 / 4, rel_tol=1e-15) and math.isclose(nv.beta, 1 / 3, rel_tol=1e-15)
    )
    return ok, f"heavy ball ({hb.alpha}, {hb.beta}), Nesterov ({nv.alpha}, {nv.beta})"


def check_negative_curvature():
    tr = scaled_gd(Quartic1D())
    nc = [r for r in tr.steps if r.flag.value == "NC" and r.alpha > 1]
    ok = str(tr.status) == "Converged" and bool(nc)
    return ok, f"status {tr.status}, {len(nc)} forward-tracked NC step(s)"


def check_counter_consistency():
    tr = scaled_gd(random_spd_quadratic(8, 3))
    c = tr.counter
    ok = c.units == c.f_evals + c.g_evals + 2 * c.hvp_evals == tr.final.units
    return ok, f"units {c.units} = f {c.f_evals} + g {c.g_evals} + 2 x hvp {c.hvp_evals}"


SUITES = [
    ("scaling order MR <= GM <= CG, GM^2 = MR*CG", check_scaling_order),
    ("unit step accepted on SPD quadratics", check_unit_steps),
    ("backtracking matches grid scan", check_armijo_grid),
    ("sample-size formula", check_sample_size),
    ("momentum theory parameters", check_theory_params),
    ("negative curvature forward tracking", check_negative_curvature),
    ("oracle unit accounting", check_counter_consistency),
]


def run_selftest(out=print) -> bool:
    all_ok = True
    for name, fn in SUITES:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        all_ok &= ok
    return all_ok
