"""Compare the compiled kernels with the numpy/scipy fallback.

Run with ``python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]``.
Prints the best-of-N wall time per kernel and backend plus the speed ratio,
and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from augury import _pykernels

try:
    from augury import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(n, rng):
    y = np.cumsum(rng.normal(size=n))
    y[rng.choice(n, size=n // 100, replace=False)] = np.nan
    center = rng.normal(size=n)
    theta = np.array([0.4, -0.2])
    return {
        "trailing_ma uniform N=60": ("trailing_ma", (y, 60, 1.0)),
        "trailing_ma exponential N=60": ("trailing_ma", (y, 60, 1.0 - 2.0 / 61)),
        "count_outside_band": ("count_outside_band", (y, center, 3.0)),
        "arma_innovations q=2": ("arma_innovations", (np.nan_to_num(y), theta)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':32s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, (name, argv) in cases(args.n, rng).items():
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*argv), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{label:32s} {t_py:10.2f} {'n/a':>10s} {'':>8s}")
            continue
        cy = getattr(_ckernels, name)
        a, b = np.asarray(py(*argv), dtype=float), np.asarray(cy(*argv), dtype=float)
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9, equal_nan=True), label
        t_cy = min(timeit.repeat(lambda: cy(*argv), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:32s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
