"""Inner-loop kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time. Set ``HESSGD_DISABLE_NUMBA=1`` to
force the numpy path (also used automatically when numba is not importable).
Both implementations are always importable as ``*_numpy`` / ``*_numba`` so the
benchmark and the test-suite can compare them side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False

_DISABLED = os.environ.get("HESSGD_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
BACKEND = "numba" if (NUMBA_AVAILABLE and not _DISABLED) else "numpy"


# --- numpy reference path ---------------------------------------------------


def curvature_reductions_numpy(g, hg):
    return float(np.dot(g, hg)), float(np.dot(g, g)), float(np.dot(hg, hg))


def softmax_stats_numpy(z, labels):
    """Row-wise cross-entropy with an implicit zero logit for the pinned last class.

    ``z`` is ``(n, K)`` with ``K = C - 1``; ``labels`` are 0-based, ``K`` meaning
    the pinned class. Returns ``(sum of per-row losses, probabilities (n, K))``.
    """
    n = z.shape[0]
    m = np.maximum(z.max(axis=1), 0.0)
    ez = np.exp(z - m[:, None])
    denom = np.exp(-m) + ez.sum(axis=1)
    lse = m + np.log(denom)
    picked = np.zeros(n)
    free = labels < z.shape[1]
    picked[free] = z[np.nonzero(free)[0], labels[free]]
    probs = ez / denom[:, None]
    return float(np.sum(lse - picked)), probs


def softmax_curvature_numpy(p, u):
    pu = p * u
    return pu - p * pu.sum(axis=1, keepdims=True)


# --- numba path --------------------------------------------------------------

if NUMBA_AVAILABLE:

    @numba.njit(cache=True)
    def curvature_reductions_numba(g, hg):
        ghg = 0.0
        gg = 0.0
        hh = 0.0
        for i in range(g.shape[0]):
            gi = g[i]
            hi = hg[i]
            ghg += gi * hi
            gg += gi * gi
            hh += hi * hi
        return ghg, gg, hh

    @numba.njit(cache=True)
    def softmax_stats_numba(z, labels):
        n, k = z.shape
        probs = np.empty((n, k))
        total = 0.0
        for i in range(n):
            m = 0.0
            for c in range(k):
                if z[i, c] > m:
                    m = z[i, c]
            denom = math.exp(-m)
            for c in range(k):
                e = math.exp(z[i, c] - m)
                probs[i, c] = e
                denom += e
            for c in range(k):
                probs[i, c] /= denom
            lse = m + math.log(denom)
            lab = labels[i]
            total += lse - (z[i, lab] if lab < k else 0.0)
        return total, probs

    @numba.njit(cache=True)
    def softmax_curvature_numba(p, u):
        n, k = p.shape
        out = np.empty((n, k))
        for i in range(n):
            s = 0.0
            for c in range(k):
                s += p[i, c] * u[i, c]
            for c in range(k):
                out[i, c] = p[i, c] * (u[i, c] - s)
        return out

else:  # pragma: no cover
    curvature_reductions_numba = None
    softmax_stats_numba = None
    softmax_curvature_numba = None


if BACKEND == "numba":
    _curv = curvature_reductions_numba
    softmax_stats = softmax_stats_numba
    softmax_curvature = softmax_curvature_numba
else:
    _curv = curvature_reductions_numpy
    softmax_stats = softmax_stats_numpy
    softmax_curvature = softmax_curvature_numpy


def curvature_reductions(g, hg):
    """``(<g, Hg>, ||g||^2, ||Hg||^2)`` as Python floats."""
    a, b, c = _curv(g, hg)
    return float(a), float(b), float(c)
