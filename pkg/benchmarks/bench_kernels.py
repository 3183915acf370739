"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from malbarcode import _kernels_py

try:
    from malbarcode import _kernels
except ImportError:
    _kernels = None


def _cases(rng):
    grid = (rng.random((33, 33)) < 0.5).astype(np.uint8)
    X = rng.normal(size=(2000, 55))
    y = rng.integers(0, 4, 2000)
    idx = rng.integers(0, 2000, 2000)
    Xs = rng.normal(size=(400, 5))
    ys = np.where(Xs[:, 0] + 0.5 * rng.normal(size=400) > 0, 1.0, -1.0)
    K = np.exp(-0.2 * ((Xs[:, None] - Xs[None]) ** 2).sum(-1))
    K = (K + K.T) / 2
    return {
        "qr_penalty 33x33": lambda m: m.qr_penalty(grid),
        "build_tree 2000x55 gini": lambda m: m.build_tree(X, y, idx, 4, 8, 0, 1),
        "build_tree 2000x55 entropy": lambda m: m.build_tree(X, y, idx, 4, 8, 1, 1),
        "smo_solve n=400": lambda m: m.smo_solve(K, ys, 1.0, 1e-3, 400 * 10000),
    }


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled kernels are not built; timing the fallback only")
    print(f"{'kernel':<28}{'python (ms)':>14}{'compiled (ms)':>16}{'speed-up':>10}")
    for name, call in _cases(np.random.default_rng(0)).items():
        t_py = _best_of(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<28}{t_py * 1e3:>14.2f}{'-':>16}{'-':>10}")
            continue
        t_c = _best_of(lambda: call(_kernels), args.repeat)
        print(f"{name:<28}{t_py * 1e3:>14.2f}{t_c * 1e3:>16.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
