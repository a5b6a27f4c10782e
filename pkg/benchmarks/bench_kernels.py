"""Time the compiled kernels against the NumPy fallback.

Run ``python benchmarks/bench_kernels.py``; pass ``--repeat`` to change the
number of timed runs (the best run is reported).
"""
import argparse
import timeit

import numpy as np

from weakint import _kernels_py

try:
    from weakint import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None


def cases(rng):
    t3 = rng.random((3,) * 8)
    t6 = rng.random((3,) * 6)
    n = 20_000
    base, values, weights = rng.random(n), rng.random(n), rng.random(n) / n
    b, P = rng.random(1000), rng.random((1000, 1000))
    idx = rng.integers(0, 3, 9)
    return {
        "seminorms_table 3^8": lambda k: k.seminorms_table(t3),
        "vf_table_all 3^7": lambda k: k.vf_table_all(t6),
        "vf_table_point n=8": lambda k: k.vf_table_point(t3, idx),
        "lstat_patched n=2e4": lambda k: k.lstat_patched(base, values, weights),
        "vf_inner_sums 1000x1000": lambda k: k.vf_inner_sums(b, P),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>10}")
    for name, call in cases(rng).items():
        py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _kernels_cy is None:
            print(f"{name:<26}{py:>12.3f}{'n/a':>13}{'':>10}")
            continue
        cy = min(timeit.repeat(lambda: call(_kernels_cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<26}{py:>12.3f}{cy:>13.3f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
