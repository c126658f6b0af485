"""Timing comparison of the compiled and pure-numpy patch kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from relupatch import kernels


def make_case(rng, n, k, ns):
    X = rng.standard_normal((ns, n))
    V = rng.standard_normal((k, n)) * 0.5
    L = rng.standard_normal((k, n))
    b = rng.standard_normal(k)
    c = rng.standard_normal(k)
    r = rng.uniform(0.1, 0.5, size=k)
    return X, V, L, b, c, r


def bench(fn, args, repeats):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    opts = ap.parse_args()

    rng = np.random.default_rng(0)
    cases = [(2, 20, 50_000), (2, 200, 200_000), (5, 100, 200_000),
             (10, 50, 500_000)]
    print(f"compiled kernel available: {kernels.HAVE_COMPILED}")
    print(f"{'n':>3} {'k':>4} {'ns':>8} {'numpy (ms)':>11} "
          f"{'compiled (ms)':>14} {'speedup':>8}")
    for n, k, ns in cases:
        args = make_case(rng, n, k, ns)
        t_np = bench(kernels.patch_matrix_numpy, args, opts.repeats)
        if kernels.HAVE_COMPILED:
            t_c = bench(kernels.patch_matrix_compiled, args, opts.repeats)
            Gc = kernels.patch_matrix_compiled(*args)
            Gn = kernels.patch_matrix_numpy(*args)
            assert np.allclose(Gc, Gn, atol=1e-12)
            print(f"{n:>3} {k:>4} {ns:>8} {t_np*1e3:>11.2f} "
                  f"{t_c*1e3:>14.2f} {t_np/t_c:>7.2f}x")
        else:
            print(f"{n:>3} {k:>4} {ns:>8} {t_np*1e3:>11.2f} {'-':>14} {'-':>8}")


if __name__ == "__main__":
    main()
