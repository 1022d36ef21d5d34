"""Test problems: quadratics, multi-class logistic regression, nonconvex toys,
synthetic data and libsvm ingestion, plus derivative checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ParseError
from .inexact import FiniteSumProblem
from .oracle import Problem, fd_gradient, fd_hvp_uncounted


# --- quadratics --------------------------------------------------------------


class QuadraticProblem(Problem):
    """``f(x) = 1/2 <x, A x> - <b, x>`` with dense symmetric ``A``."""

    name = "quadratic"

    def __init__(self, A, b=None, x0=None):
        A = np.array(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        self.A = 0.5 * (A + A.T)
        self.dim = A.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.array(b, dtype=np.float64).reshape(self.dim)
        self._x0 = np.ones(self.dim) if x0 is None else np.array(x0, dtype=np.float64).reshape(self.dim)
        eig = np.linalg.eigvalsh(self.A)
        self.mu = float(eig[0])
        self.L = float(eig[-1])
        self.x_star = None
        self.f_star = None
        if self.mu > 0:
            self.x_star = np.linalg.solve(self.A, self.b)
            self.f_star = -0.5 * float(self.b @ self.x_star)

    @property
    def M(self):
        return self.L

    @property
    def x0(self):
        return self._x0.copy()

    def value(self, x):
        return 0.5 * float(x @ (self.A @ x)) - float(self.b @ x)

    def grad(self, x):
        return self.A @ x - self.b

    def hvp(self, x, v):
        return self.A @ v


def random_spd_matrix(d: int, rng: np.random.Generator, mu: float = 1.0, L: float = 100.0) -> np.ndarray:
    """Random orthogonal basis with eigenvalues spread log-uniformly in ``[mu, L]``."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    if d == 1:
        eig = np.array([mu])
    else:
        eig = np.exp(rng.uniform(math.log(mu), math.log(L), size=d))
        eig[0], eig[-1] = mu, L
    A = (q * eig) @ q.T
    return 0.5 * (A + A.T)


def random_spd_quadratic(d: int, seed: int, mu: float = 1.0, L: float = 100.0, with_linear: bool = True) -> QuadraticProblem:
    rng = np.random.default_rng(seed)
    A = random_spd_matrix(d, rng, mu, L)
    b = rng.standard_normal(d) if with_linear else np.zeros(d)
    return QuadraticProblem(A, b, x0=rng.standard_normal(d))


class FiniteSumQuadratic(FiniteSumProblem):
    """Mean of ``1/2 <x, A_i x> - <b_i, x>``."""

    name = "quadratic-sum"

    def __init__(self, As, bs, x0=None):
        self.As = np.array(As, dtype=np.float64)
        self.bs = np.array(bs, dtype=np.float64)
        self.n, self.dim, _ = self.As.shape
        self.A = self.As.mean(axis=0)
        self.b = self.bs.mean(axis=0)
        self._x0 = np.ones(self.dim) if x0 is None else np.array(x0, dtype=np.float64)
        eig = np.linalg.eigvalsh(self.A)
        self.mu, self.L = float(eig[0]), float(eig[-1])
        self.l1max = max(float(np.linalg.norm(Ai, 2)) for Ai in self.As)

    @property
    def x0(self):
        return self._x0.copy()

    def value(self, x):
        return 0.5 * float(x @ (self.A @ x)) - float(self.b @ x)

    def grad(self, x):
        return self.A @ x - self.b

    def hvp(self, x, v):
        return self.A @ v

    def grad_subset(self, x, idx):
        return np.mean(self.As[idx] @ x - self.bs[idx], axis=0)

    def hvp_subset(self, x, v, idx):
        return np.mean(self.As[idx] @ v, axis=0)


def random_quadratic_sum(n: int, d: int, seed: int, spread: float = 1.0) -> FiniteSumQuadratic:
    """Components share an SPD core and differ by symmetric perturbations of size ``spread``."""
    rng = np.random.default_rng(seed)
    core = random_spd_matrix(d, rng, 1.0, 10.0)
    As = []
    for _ in range(n):
        E = rng.standard_normal((d, d))
        As.append(core + spread * 0.5 * (E + E.T) / math.sqrt(d))
    bs = rng.standard_normal((n, d))
    As = np.array(As)
    # keep the mean exactly SPD regardless of the perturbations
    As += (core - As.mean(axis=0))[None]
    return FiniteSumQuadratic(As, bs, x0=rng.standard_normal(d))


class ScaledProblem(Problem):
    """``h(y) = f(c * y)``; scaled iterates satisfy ``y_k = x_k / c``."""

    def __init__(self, base: Problem, c: float):
        if c == 0:
            raise ValueError("c must be nonzero")
        self.base = base
        self.c = float(c)
        self.dim = base.dim
        self.name = f"{base.name}*{c:g}"

    @property
    def x0(self):
        return self.base.x0 / self.c

    def value(self, y):
        return self.base.value(self.c * y)

    def grad(self, y):
        return self.c * self.base.grad(self.c * y)

    def hvp(self, y, v):
        return (self.c * self.c) * self.base.hvp(self.c * y, v)


# --- nonconvex toys ------------------------------------------------------------


class Quartic1D(Problem):
    """``x^4/4 - x^2/2``: minima at ``+-1``, negative curvature for ``|x| < 1/sqrt(3)``."""

    name = "quartic1d"
    dim = 1
    f_star = -0.25

    @property
    def x0(self):
        return np.array([0.5])

    def value(self, x):
        t = float(x[0])
        return t**4 / 4.0 - t * t / 2.0

    def grad(self, x):
        t = float(x[0])
        return np.array([t**3 - t])

    def hvp(self, x, v):
        t = float(x[0])
        return (3.0 * t * t - 1.0) * np.asarray(v, dtype=np.float64)


class Rosenbrock2D(Problem):
    name = "rosenbrock2d"
    dim = 2
    f_star = 0.0
    x_star = np.array([1.0, 1.0])

    @property
    def x0(self):
        return np.array([-1.2, 1.0])

    def value(self, x):
        a, b = float(x[0]), float(x[1])
        return (1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2

    def grad(self, x):
        a, b = float(x[0]), float(x[1])
        return np.array([-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)])

    def hessian(self, x):
        a, b = float(x[0]), float(x[1])
        return np.array([[2.0 - 400.0 * b + 1200.0 * a * a, -400.0 * a], [-400.0 * a, 200.0]])

    def hvp(self, x, v):
        return self.hessian(x) @ np.asarray(v, dtype=np.float64)


# --- multi-class logistic regression -----------------------------------------


class LogisticProblem(FiniteSumProblem):
    """L2-regularised softmax cross-entropy with the last class's weights pinned to zero.

    Parameters are laid out class-major: ``x.reshape(C - 1, D)`` with ``D`` the
    feature count (including the bias column when ``fit_bias``). Component ``i``
    is sample ``i``'s cross-entropy plus the full regulariser.
    """

    name = "logistic"

    def __init__(self, features, labels, n_classes: int | None = None, lam: float = 1e-3, fit_bias: bool = True):
        X = np.array(features, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        labels = np.asarray(labels).astype(np.int64)
        C = int(labels.max()) if n_classes is None else int(n_classes)
        if C < 2 or labels.min() < 1 or labels.max() > C:
            raise ValueError("labels must lie in 1..C with C >= 2")
        if lam < 0:
            raise ValueError("lam must be >= 0")
        if fit_bias:
            X = np.hstack([X, np.ones((X.shape[0], 1))])
        self.A = np.ascontiguousarray(X)
        self.labels = labels
        self._y = labels - 1
        self.n, self.D = self.A.shape
        self.C = C
        self.K = C - 1
        self.lam = float(lam)
        self.fit_bias = fit_bias
        self.dim = self.K * self.D
        self._onehot = np.zeros((self.n, self.K))
        free = self._y < self.K
        self._onehot[np.nonzero(free)[0], self._y[free]] = 1.0
        self.mu = self.lam if self.lam > 0 else None
        self.L = None

    def _logits(self, x, A):
        return A @ x.reshape(self.K, self.D).T

    def _stats(self, x, A, y):
        return _kernels.softmax_stats(np.ascontiguousarray(self._logits(x, A)), y)

    def value(self, x):
        total, _ = self._stats(x, self.A, self._y)
        return total / self.n + 0.5 * self.lam * float(x @ x)

    def grad(self, x):
        _, P = self._stats(x, self.A, self._y)
        G = (P - self._onehot).T @ self.A / self.n
        return G.reshape(-1) + self.lam * x

    def hvp(self, x, v):
        return self.hvp_subset(x, v, None)

    def _rows(self, idx):
        if idx is None:
            return self.A, self._y, self._onehot
        return self.A[idx], self._y[idx], self._onehot[idx]

    def grad_subset(self, x, idx):
        A, y, Y = self._rows(idx)
        _, P = self._stats(x, A, y)
        return ((P - Y).T @ A / A.shape[0]).reshape(-1) + self.lam * x

    def hvp_subset(self, x, v, idx):
        A, y, _ = self._rows(idx)
        _, P = self._stats(x, A, y)
        U = np.ascontiguousarray(A @ np.asarray(v, dtype=np.float64).reshape(self.K, self.D).T)
        R = _kernels.softmax_curvature(P, U)
        return (R.T @ A / A.shape[0]).reshape(-1) + self.lam * v


def spectral_norm(A: np.ndarray, tol: float = 1e-8, max_iter: int = 1000) -> tuple[float, bool]:
    """Largest singular value by power iteration on ``A^T A``; returns ``(norm, converged)``."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0, True
        v = w / nw
        if abs(nw - est) <= tol * nw:
            return math.sqrt(nw), True
        est = nw
    return math.sqrt(est), False


def logistic_spectrum_bound(problem: LogisticProblem, tol: float = 1e-8, max_iter: int = 1000) -> tuple[float, float]:
    """``(mu_approx, L_approx) = (lam, (C-1)/(4n) ||A||^2 + lam)``."""
    norm, ok = spectral_norm(problem.A, tol, max_iter)
    if not ok:
        warnings.warn("power iteration did not converge; using the Frobenius norm bound", RuntimeWarning)
        norm = float(np.linalg.norm(problem.A))
    return problem.lam, (problem.C - 1) / (4.0 * problem.n) * norm**2 + problem.lam


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 500
    d: int = 20
    C: int = 3
    separation: float = 1.0
    seed: int = 0
    lam: float = 1e-3
    feature_spread: float = 1.0


def gen_synthetic_classification(spec: SyntheticSpec) -> LogisticProblem:
    """Gaussian clusters around random class centres scaled by ``separation``.

    ``feature_spread > 1`` rescales feature columns geometrically from 0.1 to
    ``feature_spread``, which makes the problem ill-conditioned.
    """
    rng = np.random.default_rng(spec.seed)
    centres = spec.separation * rng.standard_normal((spec.C, spec.d))
    labels = rng.permutation(np.arange(spec.n) % spec.C) + 1
    X = centres[labels - 1] + rng.standard_normal((spec.n, spec.d))
    if spec.feature_spread != 1.0:
        if not spec.feature_spread > 0.1:
            raise ValueError("feature_spread must exceed 0.1")
        X *= np.geomspace(0.1, spec.feature_spread, spec.d)
    return LogisticProblem(X, labels, n_classes=spec.C, lam=spec.lam)


def load_libsvm(path, n_features: int | None = None, lam: float = 1e-3, strict: bool = True) -> LogisticProblem:
    """Read ``label idx:val ...`` lines (1-based indices) into a dense problem.

    Distinct label values are mapped to ``1..C`` in sorted order.
    """
    rows: list[dict[int, float]] = []
    raw_labels: list[float] = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            label = float(parts[0])
        except ValueError:
            raise ParseError(f"non-numeric label {parts[0]!r}", lineno) from None
        if not math.isfinite(label):
            raise ParseError(f"non-finite label {parts[0]!r}", lineno)
        feats: dict[int, float] = {}
        for tok in parts[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed feature {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed feature {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"feature index must be >= 1, got {idx}", lineno)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            if idx in feats and strict:
                raise ParseError(f"duplicate feature index {idx}", lineno)
            feats[idx] = val
        rows.append(feats)
        raw_labels.append(label)
    if not rows:
        raise ParseError("no data lines")
    d = max((max(r) for r in rows if r), default=0)
    if n_features is not None:
        if n_features < d:
            raise ParseError(f"feature index {d} exceeds n_features={n_features}")
        d = n_features
    if d == 0:
        d = 1
    X = np.zeros((len(rows), d))
    for i, feats in enumerate(rows):
        for j, v in feats.items():
            X[i, j - 1] = v
    classes = sorted(set(raw_labels))
    if len(classes) < 2:
        raise ParseError("need at least two distinct labels")
    lookup = {c: i + 1 for i, c in enumerate(classes)}
    labels = np.array([lookup[c] for c in raw_labels])
    prob = LogisticProblem(X, labels, n_classes=len(classes), lam=lam)
    prob.class_values = classes
    return prob


# --- derivative checks -------------------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    max_rel_dev: float
    worst_index: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_dev <= self.tol

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return f"{verdict}: max relative deviation {self.max_rel_dev:.3e} at coordinate {self.worst_index} (tol {self.tol:.1e})"


def _report(analytic, reference, tol):
    scale = max(1.0, float(np.max(np.abs(reference))))
    dev = np.abs(np.asarray(analytic) - reference) / scale
    i = int(np.argmax(dev))
    return CheckReport(float(dev[i]), i, tol)


def grad_check(problem: Problem, x, tol: float = 1e-5) -> CheckReport:
    x = np.asarray(x, dtype=np.float64)
    return _report(problem.grad(x), fd_gradient(problem, x), tol)


def hvp_check(problem: Problem, x, v, tol: float = 1e-5) -> CheckReport:
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return _report(problem.hvp(x, v), fd_hvp_uncounted(problem, x, v), tol)

