"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20] [--rows 200000]

Each kernel runs once untimed (jit warm-up), then best-of-N wall time is reported.
Outputs are cross-checked so a fast wrong kernel shows up here too.
"""

import argparse
import time

import numpy as np

from iriscd.kernels import IMPLEMENTATIONS


def best_of(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(rows, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 3, rows).astype(np.int64)
    y = rng.integers(0, 4, rows).astype(np.int64)
    strata = rng.integers(0, 12, rows).astype(np.int64)
    counts = IMPLEMENTATIONS["numpy"]["stratified_counts"](x, y, strata, 3, 4, 12)
    A = rng.normal(scale=0.4, size=(12, 12)) ** 2
    return {
        "stratified_counts": (x, y, strata, 3, 4, 12),
        "g_statistic": (counts,),
        "family_loglik": (y, strata, 4, 12),
        "expm": (A,),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--rows", type=int, default=200_000)
    args = ap.parse_args()

    impls = sorted(IMPLEMENTATIONS)
    if "numba" not in impls:
        print("numba is not installed; only the numpy path is timed")
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name in impls) + "   speedup  agree")
    for kernel, call_args in workloads(args.rows).items():
        times = {name: best_of(IMPLEMENTATIONS[name][kernel], call_args, args.repeat) for name in impls}
        row = f"{kernel:<18}" + "".join(f"{times[n] * 1e3:>10.3f}ms" for n in impls)
        if "numba" in times:
            outs = [IMPLEMENTATIONS[n][kernel](*call_args) for n in impls]
            row += f"   {times['numpy'] / times['numba']:>6.1f}x  {same(*outs)}"
        print(row)


if __name__ == "__main__":
    main()
