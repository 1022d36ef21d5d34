"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 200]

Also times one full logistic HVP under each backend by swapping the kernel
bindings, which is what a run actually pays per iteration.
"""

import argparse
import time

import numpy as np

from hessgd import _kernels as K
from hessgd.problems import SyntheticSpec, gen_synthetic_classification


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--n", type=int, default=5000)
    args = ap.parse_args()
    if not K.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    d = 200_000
    g, hg = rng.standard_normal(d), rng.standard_normal(d)
    z = rng.standard_normal((args.n, 9))
    labels = rng.integers(0, 10, args.n)
    p = K.softmax_stats_numpy(z, labels)[1]
    u = rng.standard_normal(p.shape)

    cases = [
        (f"curvature_reductions d={d}", lambda: K.curvature_reductions_numpy(g, hg), lambda: K.curvature_reductions_numba(g, hg)),
        (f"softmax_stats n={args.n} K=9", lambda: K.softmax_stats_numpy(z, labels), lambda: K.softmax_stats_numba(z, labels)),
        (f"softmax_curvature n={args.n} K=9", lambda: K.softmax_curvature_numpy(p, u), lambda: K.softmax_curvature_numba(p, u)),
    ]

    prob = gen_synthetic_classification(SyntheticSpec(n=args.n, d=50, C=10))
    x = 0.1 * rng.standard_normal(prob.dim)
    v = rng.standard_normal(prob.dim)

    def hvp_with(stats, curv):
        def run():
            K.softmax_stats, K.softmax_curvature = stats, curv
            prob.hvp(x, v)
        return run

    saved = K.softmax_stats, K.softmax_curvature
    cases.append((
        f"logistic hvp n={args.n} d=50 C=10",
        hvp_with(K.softmax_stats_numpy, K.softmax_curvature_numpy),
        hvp_with(K.softmax_stats_numba, K.softmax_curvature_numba),
    ))

    print(f"{'kernel':<36} {'numpy [us]':>12} {'numba [us]':>12} {'speedup':>8}")
    try:
        for name, f_np, f_nb in cases:
            t_np = best_of(f_np, args.repeat)
            t_nb = best_of(f_nb, args.repeat)
            print(f"{name:<36} {t_np * 1e6:>12.1f} {t_nb * 1e6:>12.1f} {t_np / t_nb:>7.2f}x")
    finally:
        K.softmax_stats, K.softmax_curvature = saved


if __name__ == "__main__":
    main()
