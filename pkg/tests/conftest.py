import numpy as np
import pytest

from hessgd.oracle import FunctionProblem
from hessgd.problems import QuadraticProblem


def quad(diag, b=None, x0=None):
    return QuadraticProblem(np.diag(np.asarray(diag, dtype=float)), b=b, x0=x0)


def half_norm_sq(d=2):
    return FunctionProblem(d, lambda x: 0.5 * float(x @ x), lambda x: x.copy(), lambda x, v: np.asarray(v, dtype=float).copy())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
