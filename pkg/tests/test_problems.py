import math

import numpy as np
import pytest

from hessgd.errors import ParseError
from hessgd.optimizers import scaled_gd
from hessgd.problems import (
    LogisticProblem,
    QuadraticProblem,
    Quartic1D,
    Rosenbrock2D,
    ScaledProblem,
    SyntheticSpec,
    gen_synthetic_classification,
    grad_check,
    hvp_check,
    load_libsvm,
    logistic_spectrum_bound,
    random_quadratic_sum,
    random_spd_quadratic,
    spectral_norm,
)
from hessgd.trace import Status


def _small_logistic(seed=0, **kw):
    return gen_synthetic_classification(SyntheticSpec(n=60, d=4, C=3, seed=seed, **kw))


def test_logistic_value_at_zero_is_log_c():
    for C in (2, 3, 5):
        prob = gen_synthetic_classification(SyntheticSpec(n=40, d=3, C=C))
        assert prob.value(np.zeros(prob.dim)) == pytest.approx(math.log(C), rel=1e-14)
        assert prob.dim == (C - 1) * 4


def test_logistic_binary_matches_closed_form(rng):
    X = rng.standard_normal((15, 2))
    y = rng.integers(1, 3, 15)
    prob = LogisticProblem(X, y, n_classes=2, lam=0.1, fit_bias=False)
    w = rng.standard_normal(2)
    z = X @ w
    # class 2 is the pinned reference: loss is log(1 + e^z) - z [y == 1]
    ref = np.mean(np.log1p(np.exp(z)) - z * (y == 1)) + 0.05 * w @ w
    assert prob.value(w) == pytest.approx(ref, rel=1e-13)


def test_quadratic_closed_forms(rng):
    prob = random_spd_quadratic(6, 1, mu=0.5, L=20.0)
    assert prob.mu == pytest.approx(0.5, rel=1e-10) and prob.L == pytest.approx(20.0, rel=1e-10)
    np.testing.assert_allclose(prob.grad(prob.x_star), 0.0, atol=1e-10)
    assert prob.value(prob.x_star) == pytest.approx(prob.f_star, rel=1e-12)
    with pytest.raises(ValueError):
        QuadraticProblem(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "prob",
    [random_spd_quadratic(5, 0), random_quadratic_sum(6, 4, 0), _small_logistic(), Quartic1D(), Rosenbrock2D()],
    ids=lambda p: p.name,
)
def test_derivatives_pass_finite_difference_checks(prob, rng):
    for _ in range(3):
        x = 0.5 * rng.standard_normal(prob.dim)
        v = rng.standard_normal(prob.dim)
        g, h = grad_check(prob, x), hvp_check(prob, x, v)
        assert g.passed and h.passed, (str(g), str(h))
        if isinstance(prob, QuadraticProblem):
            assert g.max_rel_dev <= 1e-9 and h.max_rel_dev <= 1e-9


def test_corrupted_gradient_is_caught_at_its_coordinate(rng):
    prob = _small_logistic()
    good = prob.grad

    def bad(x):
        out = good(x)
        out[5] += 1e-2
        return out

    prob.grad = bad
    rep = grad_check(prob, 0.1 * rng.standard_normal(prob.dim))
    assert not rep.passed
    assert rep.worst_index == 5
    assert "coordinate 5" in str(rep)


def test_spectrum_bound_examples():
    prob = _small_logistic(lam=0.01)
    mu, L = logistic_spectrum_bound(prob)
    assert mu == 0.01
    H = np.column_stack([prob.hvp(np.zeros(prob.dim), e) for e in np.eye(prob.dim)])
    assert np.linalg.eigvalsh(H)[-1] <= L * (1 + 1e-10)
    # a single sample, binary, no bias: bound is ||a||^2 / 4 and tight at zero
    one = LogisticProblem(np.array([[3.0, 4.0]]), [1], n_classes=2, lam=0.0, fit_bias=False)
    assert logistic_spectrum_bound(one)[1] == pytest.approx(25 / 4, rel=1e-10)
    Hz = np.column_stack([one.hvp(np.zeros(2), e) for e in np.eye(2)])
    assert np.linalg.eigvalsh(Hz)[-1] == pytest.approx(25 / 4, rel=1e-12)
    # doubling the data multiplies L - lam by four
    twice = LogisticProblem(2 * prob.A, prob.labels, n_classes=3, lam=0.01, fit_bias=False)
    assert logistic_spectrum_bound(twice)[1] - 0.01 == pytest.approx(4 * (L - 0.01), rel=1e-6)


def test_spectral_norm_matches_svd(rng):
    A = rng.standard_normal((30, 7))
    s, ok = spectral_norm(A, tol=1e-14, max_iter=10_000)
    assert ok
    assert s == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-6)
    assert spectral_norm(np.zeros((3, 2))) == (0.0, True)


def test_synthetic_generator():
    a, b = _small_logistic(seed=4), _small_logistic(seed=4)
    np.testing.assert_array_equal(a.A, b.A)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.A, _small_logistic(seed=5).A)
    assert np.bincount(a.labels)[1:].tolist() == [20, 20, 20]
    # no separation: the optimum barely improves on the uniform guess
    flat = gen_synthetic_classification(SyntheticSpec(n=3000, d=2, C=3, separation=0.0, lam=1e-2))
    tr = scaled_gd(flat)
    assert tr.status is Status.CONVERGED
    assert math.log(3) - 0.01 < tr.final.f <= math.log(3)
    # n = C far-apart points are nearly separable
    far = gen_synthetic_classification(SyntheticSpec(n=3, d=2, C=3, separation=50.0, lam=1e-3))
    assert scaled_gd(far).final.f < 0.1 * math.log(3)


def test_libsvm_parsing(tmp_path):
    path = tmp_path / "toy.svm"
    path.write_text("2 1:0.5 3:-1\n1\n# comment line\n\n2 2:7 # trailing\n")
    prob = load_libsvm(path)
    np.testing.assert_array_equal(prob.A[0], [0.5, 0.0, -1.0, 1.0])
    np.testing.assert_array_equal(prob.A[1], [0.0, 0.0, 0.0, 1.0])
    assert prob.labels.tolist() == [2, 1, 2]
    assert prob.class_values == [1.0, 2.0]
    assert load_libsvm(path, n_features=5).A.shape == (3, 6)
    with pytest.raises(ParseError):
        load_libsvm(path, n_features=2)


@pytest.mark.parametrize(
    "text, line",
    [
        ("1 1:1\n2 1:1 1:2\n", 2),
        ("1 1:1\nspam 1:1\n", 2),
        ("1 0:1\n2 1:1\n", 1),
        ("1 1=3\n2 1:1\n", 1),
        ("1 1:nan\n2 1:1\n", 1),
    ],
)
def test_libsvm_errors_carry_line_numbers(tmp_path, text, line):
    path = tmp_path / "bad.svm"
    path.write_text(text)
    with pytest.raises(ParseError) as exc:
        load_libsvm(path)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_libsvm_lenient_duplicates_keep_last(tmp_path):
    path = tmp_path / "dup.svm"
    path.write_text("1 1:1 1:2\n2 1:3\n")
    assert load_libsvm(path, strict=False).A[0, 0] == 2.0
    path.write_text("1 1:1\n1 1:3\n")
    with pytest.raises(ParseError):
        load_libsvm(path)


def test_logistic_is_convex_along_segments(rng):
    prob = _small_logistic(seed=2, lam=0.0)
    for _ in range(100):
        x, y = rng.standard_normal((2, prob.dim))
        t = rng.uniform()
        mid = prob.value(t * x + (1 - t) * y)
        assert mid <= t * prob.value(x) + (1 - t) * prob.value(y) + 1e-12


def test_scaled_problem_chain_rule(rng):
    base = _small_logistic()
    sp = ScaledProblem(base, 3.0)
    y, v = rng.standard_normal((2, base.dim))
    assert sp.value(y) == base.value(3 * y)
    np.testing.assert_allclose(sp.grad(y), 3 * base.grad(3 * y), rtol=1e-15)
    np.testing.assert_allclose(sp.hvp(y, v), 9 * base.hvp(3 * y, v), rtol=1e-15)
    np.testing.assert_allclose(sp.x0, base.x0 / 3)
    assert grad_check(sp, 0.1 * y).passed
    with pytest.raises(ValueError):
        ScaledProblem(base, 0.0)


def test_toy_problems():
    rb = Rosenbrock2D()
    np.testing.assert_array_equal(rb.grad(rb.x_star), [0.0, 0.0])
    assert rb.value(rb.x_star) == 0.0
    assert np.all(np.linalg.eigvalsh(rb.hessian(rb.x_star)) > 0)
    q = Quartic1D()
    for t in (-1.0, 1.0):
        assert q.grad(np.array([t]))[0] == 0.0 and q.value(np.array([t])) == q.f_star
    assert q.hvp(np.zeros(1), np.ones(1))[0] == -1.0
