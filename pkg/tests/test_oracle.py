import math

import numpy as np
import pytest

from conftest import half_norm_sq, quad
from hessgd.errors import NumericalFailure, ZeroDirection
from hessgd.oracle import (
    EPS,
    FunctionProblem,
    OracleCounter,
    as_param,
    eval_gradient,
    eval_hvp,
    eval_value,
    fd_gradient,
    fd_hvp,
)
from hessgd.problems import Quartic1D, Rosenbrock2D, SyntheticSpec, gen_synthetic_classification


def test_value_of_half_norm():
    c = OracleCounter()
    assert eval_value(half_norm_sq(), np.array([3.0, 4.0]), c) == 12.5
    assert (c.f_evals, c.units) == (1, 1)


def test_quartic_value_gradient_hvp():
    q = Quartic1D()
    c = OracleCounter()
    assert eval_value(q, np.array([1.0]), c) == -0.25
    assert eval_gradient(q, np.array([0.5]), c)[0] == pytest.approx(-0.375, rel=1e-15)
    assert eval_hvp(q, np.array([0.5]), np.array([1.0]), c)[0] == pytest.approx(-0.25, rel=1e-15)
    assert c.units == 1 + 1 + 2


def test_logistic_value_at_zero_is_log_classes():
    for C in (2, 3, 7):
        prob = gen_synthetic_classification(SyntheticSpec(n=60, d=4, C=C, lam=0.0))
        assert eval_value(prob, np.zeros(prob.dim), OracleCounter()) == pytest.approx(math.log(C), rel=1e-14)


def test_gradient_of_half_norm():
    c = OracleCounter()
    np.testing.assert_array_equal(eval_gradient(half_norm_sq(), np.array([3.0, 4.0]), c), [3.0, 4.0])
    assert (c.g_evals, c.units) == (1, 1)


def test_hvp_diag_and_zero_direction():
    c = OracleCounter()
    p = quad([1.0, 4.0])
    np.testing.assert_array_equal(eval_hvp(p, np.array([7.0, -2.0]), np.array([1.0, 4.0]), c), [1.0, 16.0])
    np.testing.assert_array_equal(eval_hvp(p, np.zeros(2), np.zeros(2), c), [0.0, 0.0])
    assert (c.hvp_evals, c.units) == (2, 4)


@pytest.mark.parametrize("problem", [Rosenbrock2D(), Quartic1D(), quad([1.0, 3.0, 9.0], b=[1.0, 0.0, -2.0])])
def test_analytic_gradient_matches_central_differences(problem, rng):
    for _ in range(10):
        x = rng.uniform(-2, 2, problem.dim)
        g = problem.grad(x)
        fd = fd_gradient(problem, x)
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_non_finite_results_raise_with_point():
    bad = FunctionProblem(1, lambda x: math.inf, lambda x: np.array([math.nan]))
    c = OracleCounter()
    with pytest.raises(NumericalFailure) as exc:
        eval_value(bad, np.array([2.0]), c)
    np.testing.assert_array_equal(exc.value.x, [2.0])
    with pytest.raises(NumericalFailure):
        eval_gradient(bad, np.array([2.0]), c)
    assert c.units == 2


def test_fd_hvp_on_quadratic(rng):
    A = rng.standard_normal((5, 5))
    A = A + A.T
    prob = FunctionProblem(5, lambda x: 0.5 * x @ A @ x, lambda x: A @ x)
    assert not prob.has_analytic_hvp
    v = rng.standard_normal(5)
    c = OracleCounter()
    out = fd_hvp(prob, rng.standard_normal(5), v, c)
    np.testing.assert_allclose(out, A @ v, rtol=1e-6, atol=1e-6 * np.linalg.norm(A @ v))
    assert (c.g_evals, c.units) == (2, 2)
    # eval_hvp routes through the fallback and bills two gradients, not an HVP
    c2 = OracleCounter()
    eval_hvp(prob, np.zeros(5), v, c2)
    assert (c2.hvp_evals, c2.g_evals) == (0, 2)


def test_fd_hvp_scales_linearly_and_handles_large_v(rng):
    q = Quartic1D()
    x = np.array([0.5])
    base = fd_hvp(q, x, np.array([1.0]), OracleCounter())[0]
    assert base == pytest.approx(-0.25, abs=1e-6)
    for c in (1e-3, 7.0, 1e8):
        assert fd_hvp(q, x, np.array([c]), OracleCounter())[0] == pytest.approx(c * base, rel=1e-6)


def test_fd_hvp_zero_direction():
    with pytest.raises(ZeroDirection):
        fd_hvp(Quartic1D(), np.array([0.5]), np.array([0.0]), OracleCounter())


def test_fd_step_sizes_follow_the_rules():
    seen = []

    def grad(x):
        seen.append(x.copy())
        return x.copy()

    prob = FunctionProblem(2, lambda x: 0.5 * x @ x, grad)
    x = np.array([3.0, 4.0])
    fd_hvp(prob, x, np.array([0.0, 10.0]), OracleCounter())
    h = math.sqrt(EPS) * (1 + 5.0)
    np.testing.assert_allclose(seen[0] - x, [0.0, h], rtol=1e-12)
    np.testing.assert_allclose(seen[1] - x, [0.0, -h], rtol=1e-12)


def test_counter_invariant_under_random_call_sequences(rng):
    p = Rosenbrock2D()
    c = OracleCounter()
    last = c.snapshot()
    for _ in range(200):
        x = rng.standard_normal(2)
        r = rng.integers(3)
        if r == 0:
            eval_value(p, x, c)
        elif r == 1:
            eval_gradient(p, x, c)
        else:
            eval_hvp(p, x, rng.standard_normal(2), c)
        assert c.units == c.f_evals + c.g_evals + 2 * c.hvp_evals
        snap = c.snapshot()
        assert all(snap[k] >= last[k] for k in snap)
        last = snap


def test_fractional_hvp_billing():
    c = OracleCounter()
    c.bill_hvp(0.25)
    assert (c.hvp_evals, c.units) == (1, 0.5)


def test_as_param_rejects_bad_vectors():
    with pytest.raises(ValueError):
        as_param([1.0, math.nan])
    with pytest.raises(ValueError):
        as_param(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        as_param([1.0, 2.0], d=3)
    src = np.array([1.0, 2.0])
    out = as_param(src)
    out[0] = 5.0
    assert src[0] == 1.0


def _symmetry_problems():
    yield Rosenbrock2D()
    yield Quartic1D()
    yield gen_synthetic_classification(SyntheticSpec(n=40, d=3, C=4))


@pytest.mark.parametrize("problem", list(_symmetry_problems()), ids=lambda p: p.name)
def test_hvp_symmetric_and_linear(problem, rng):
    for _ in range(100):
        x = rng.uniform(-1, 1, problem.dim)
        u, v = rng.standard_normal(problem.dim), rng.standard_normal(problem.dim)
        a = float(u @ problem.hvp(x, v))
        b = float(v @ problem.hvp(x, u))
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a), abs(b))
    a, b = 2.5, -0.75
    lhs = problem.hvp(x, a * u + b * v)
    rhs = a * problem.hvp(x, u) + b * problem.hvp(x, v)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-12)
