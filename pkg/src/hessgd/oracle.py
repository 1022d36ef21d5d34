"""Problem contract, counted oracle calls and the finite-difference HVP fallback.

Cost model (equivalent function evaluations): value 1, gradient 1, HVP 2.
Counting is per call; any caching belongs to the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, ZeroDirection

EPS = np.finfo(np.float64).eps

F_COST = 1.0
G_COST = 1.0
HVP_COST = 2.0


def as_param(x, d: int | None = None) -> np.ndarray:
    """Validate and copy ``x`` into a 1-D float64 parameter vector."""
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim > 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {arr.shape}")
    arr = arr.reshape(-1)
    if arr.size == 0:
        raise ValueError("parameter vector must have length >= 1")
    if d is not None and arr.size != d:
        raise ValueError(f"expected length {d}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter vector has non-finite entries")
    return arr


@dataclass
class OracleCounter:
    """Tally of oracle calls.

    ``hvp_units`` is ``2 * hvp_evals`` for exact HVPs; subsampled HVPs bill a
    pro-rated fraction, so ``units`` may be fractional.
    """

    f_evals: int = 0
    g_evals: int = 0
    hvp_evals: int = 0
    hvp_units: float = 0.0

    @property
    def units(self) -> float:
        return self.f_evals * F_COST + self.g_evals * G_COST + self.hvp_units

    def bill_f(self, n: int = 1) -> None:
        self.f_evals += n

    def bill_g(self, n: int = 1) -> None:
        self.g_evals += n

    def bill_hvp(self, fraction: float = 1.0) -> None:
        if fraction < 0:
            raise ValueError("fraction must be nonnegative")
        self.hvp_evals += 1
        self.hvp_units += HVP_COST * fraction

    def snapshot(self) -> dict:
        return {
            "f_evals": self.f_evals,
            "g_evals": self.g_evals,
            "hvp_evals": self.hvp_evals,
            "units": self.units,
        }


class Problem:
    """Twice-differentiable objective ``f: R^d -> R``.

    Subclasses implement ``value``, ``grad`` and optionally ``hvp``; when
    ``has_analytic_hvp`` is False the counted HVP routes through :func:`fd_hvp`.
    ``mu`` / ``L`` carry known or estimated curvature bounds when available,
    ``x0`` the default starting point and ``f_star`` the optimal value if known.
    Instances must not be mutated after construction.
    """

    name = "problem"
    dim: int
    mu: float | None = None
    L: float | None = None
    f_star: float | None = None
    has_analytic_hvp = True

    @property
    def x0(self) -> np.ndarray:
        return np.zeros(self.dim)

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hvp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FunctionProblem(Problem):
    """Problem assembled from plain callables; ``hvp=None`` selects the FD fallback."""

    def __init__(self, dim, value, grad, hvp=None, *, name="function", x0=None, mu=None, L=None, f_star=None):
        self.dim = int(dim)
        self._value = value
        self._grad = grad
        self._hvp = hvp
        self.has_analytic_hvp = hvp is not None
        self.name = name
        self._x0 = None if x0 is None else as_param(x0, self.dim)
        self.mu = mu
        self.L = L
        self.f_star = f_star

    @property
    def x0(self):
        return np.zeros(self.dim) if self._x0 is None else self._x0.copy()

    def value(self, x):
        return self._value(x)

    def grad(self, x):
        return np.asarray(self._grad(x), dtype=np.float64)

    def hvp(self, x, v):
        if self._hvp is None:
            raise NotImplementedError("no analytic HVP")
        return np.asarray(self._hvp(x, v), dtype=np.float64)


def _check_vector(out, d, what, x):
    out = np.asarray(out, dtype=np.float64).reshape(-1)
    if out.shape[0] != d:
        raise ValueError(f"{what} returned length {out.shape[0]}, expected {d}")
    if not np.all(np.isfinite(out)):
        raise NumericalFailure(f"non-finite {what}", x)
    return out


def eval_value(problem: Problem, x: np.ndarray, counter: OracleCounter) -> float:
    counter.bill_f()
    val = float(problem.value(x))
    if not np.isfinite(val):
        raise NumericalFailure("non-finite objective value", x)
    return val


def eval_value_unchecked(problem: Problem, x: np.ndarray, counter: OracleCounter) -> float:
    """Billed value evaluation that returns inf/nan instead of raising.

    Line-search trials use this: a non-finite trial value simply fails the
    sufficient-decrease test.
    """
    counter.bill_f()
    with np.errstate(over="ignore", invalid="ignore"):
        return float(problem.value(x))


def eval_gradient(problem: Problem, x: np.ndarray, counter: OracleCounter) -> np.ndarray:
    counter.bill_g()
    return _check_vector(problem.grad(x), problem.dim, "gradient", x)


def eval_hvp(problem: Problem, x: np.ndarray, v: np.ndarray, counter: OracleCounter) -> np.ndarray:
    if not problem.has_analytic_hvp:
        return fd_hvp(problem, x, v, counter)
    counter.bill_hvp()
    return _check_vector(problem.hvp(x, v), problem.dim, "Hessian-vector product", x)


def fd_hvp(problem: Problem, x: np.ndarray, v: np.ndarray, counter: OracleCounter) -> np.ndarray:
    """Central difference of the gradient along ``v / ||v||``; bills two gradients."""
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise ZeroDirection("finite-difference HVP needs a nonzero direction")
    vhat = v / vnorm
    h = np.sqrt(EPS) * (1.0 + float(np.linalg.norm(x)))
    gp = eval_gradient(problem, x + h * vhat, counter)
    gm = eval_gradient(problem, x - h * vhat, counter)
    return _check_vector((gp - gm) * (vnorm / (2.0 * h)), problem.dim, "finite-difference HVP", x)


def fd_gradient(problem: Problem, x: np.ndarray) -> np.ndarray:
    """Uncounted central-difference gradient, step ``cbrt(eps) * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    hbase = np.cbrt(EPS)
    for i in range(x.size):
        h = hbase * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (problem.value(xp) - problem.value(xm)) / (xp[i] - xm[i])
    return out


def fd_hvp_uncounted(problem: Problem, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Uncounted central-difference HVP with the cube-root step (validation only)."""
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return np.zeros_like(x, dtype=np.float64)
    vhat = v / vnorm
    h = np.cbrt(EPS) * (1.0 + float(np.linalg.norm(x)))
    return (problem.grad(x + h * vhat) - problem.grad(x - h * vhat)) * (vnorm / (2.0 * h))
