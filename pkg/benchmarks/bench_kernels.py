"""Benchmark the compiled kernels against the pure-NumPy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from stpolar import kernels


def timeit(fn, *args, repeat=5, warmup=1):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    impls = kernels.implementations()
    if "compiled" not in impls:
        print("compiled extension not available; benchmarking fallback only")
    rng = np.random.default_rng(0)

    cases = []
    for n in (256, 1024):
        llr = rng.normal(size=n) * 2
        fm = (rng.random(n) < 0.5).astype(np.uint8)
        fv = np.zeros(n, np.uint8)
        cases.append((f"sc_decode N={n}", "sc_decode", (llr, fm, fv)))
        cases.append((f"sc_genie_errors N={n}", "sc_genie_errors",
                      (llr, rng.integers(0, 2, n).astype(np.uint8))))
    for b, rows in ((8, 2048), (12, 512)):
        met = rng.normal(size=(rows, 1 << b)) * 3
        pre = rng.integers(0, 1 << 3, rows)
        cases.append((f"subset_llrs B={b} rows={rows}", "subset_llrs",
                      (met, pre, 4, b)))
        lab = rng.integers(0, 1 << b, rows)
        cases.append((f"mi_terms B={b} rows={rows}", "mi_terms",
                      (met, lab, b)))

    width = max(len(name) for name, _, _ in cases)
    header = f"{'kernel'.ljust(width)}  python      compiled    speedup"
    print(header)
    print("-" * len(header))
    for name, fn_name, args in cases:
        t_py = timeit(getattr(impls["python"], fn_name), *args)
        if "compiled" in impls:
            t_c = timeit(getattr(impls["compiled"], fn_name), *args)
            print(f"{name.ljust(width)}  {t_py * 1e3:8.3f}ms  "
                  f"{t_c * 1e3:8.3f}ms  {t_py / t_c:6.1f}x")
        else:
            print(f"{name.ljust(width)}  {t_py * 1e3:8.3f}ms")


if __name__ == "__main__":
    main()
