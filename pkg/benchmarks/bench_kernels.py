"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and problem size with the best-of-N time for
each implementation and the speedup.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from padplan import _pykernels

try:
    from padplan import _ckernels
except ImportError:
    _ckernels = None


def pattern_case(R: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    K = np.ascontiguousarray(np.eye(R) + np.triu(rng.uniform(0, 0.3, (R, R)), 1))
    base = rng.uniform(0.3, 0.5, R)
    gain = rng.uniform(0.02, 0.12, R)
    varcost = rng.uniform(0.5, 2.0, R)
    cc = rng.uniform(0.06, 0.12, R)
    return (K, base, gain, varcost, cc, 0.42, 1e-9)


def propagation_case(R: int, T: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    order = np.arange(R, dtype=np.intp)
    ptr = [0]
    idx = []
    for r in range(R):
        idx.extend(k for k in range(max(0, r - 3), r))
        ptr.append(len(idx))
    idx_arr = np.array(idx, dtype=np.intp)
    coef = rng.uniform(0, 0.3, (idx_arr.size, T))
    const = rng.uniform(0.2, 0.4, (R, T))
    gain = rng.uniform(0, 0.1, (R, T))
    return (order, np.array(ptr, dtype=np.intp), idx_arr, coef, const, gain)


def best_time(fn, args, repeat: int) -> float:
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; run: python setup.py build_ext --inplace")
    cases = [("best_period_pattern", f"R={R}", pattern_case(R)) for R in (4, 8, 12, 16)]
    cases += [
        ("propagate_topological", f"R={R} T={T}", propagation_case(R, T))
        for R, T in ((10, 24), (10, 720), (100, 720))
    ]
    print(f"{'kernel':24s} {'size':12s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, size, case in cases:
        py = best_time(getattr(_pykernels, name), case, args.repeat)
        if _ckernels is None:
            print(f"{name:24s} {size:12s} {py * 1e6:10.1f}us {'-':>12s} {'-':>8s}")
            continue
        cy = best_time(getattr(_ckernels, name), case, args.repeat)
        print(f"{name:24s} {size:12s} {py * 1e6:10.1f}us {cy * 1e6:10.1f}us {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
