"""Numba kernels vs the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is called once
to trigger compilation, then timed with ``timeit``; outputs of the two paths
are compared before timing.
"""
import argparse
import timeit

import numpy as np

from qgflow import _kernels
from qgflow.fields import random_annulus
from qgflow.spectral import Grid2D


def _modes(f):
    g = f.grid
    c = np.where(g.dealias_mask, f.coeffs, 0.0)
    nz = np.nonzero(c)
    return g.k1[nz].astype(np.int64), g.k2[nz].astype(np.int64), c[nz].astype(np.complex128)


def cases(n):
    g = Grid2D(n)
    f = random_annulus(g, 1, g.kmax, 1.0, seed=0)
    h = random_annulus(g, 1, g.kmax, 1.0, seed=1)
    shell = g.k_l1.astype(np.int64)
    p1, p2, fv = _modes(f)
    q1, q2, gv = _modes(h)
    return {
        "shell_max": (np.abs(f.coeffs), shell, int(shell.max()) + 1),
        "weighted_convolution": (p1, p2, fv, q1, q2, gv, g.n, g.kmax, 0.5),
        "pair_exponent_max": (min(g.kmax, 10),),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"compiled backend: {_kernels.BACKEND}")
    print(f"{'kernel':<22s}{'n':>5s}{'numba [ms]':>14s}{'numpy [ms]':>14s}{'speedup':>10s}")
    for n in args.sizes:
        for name, call_args in cases(n).items():
            fast = getattr(_kernels, name)
            slow = _kernels.numpy_kernels[name]
            a = fast(*call_args)
            b = slow(*call_args)
            if not np.allclose(a, b, rtol=1e-12, atol=1e-14):
                raise SystemExit(f"{name}: backends disagree at n={n}")
            t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat)) * 1e3
            t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<22s}{n:>5d}{t_fast:>14.3f}{t_slow:>14.3f}{t_slow / t_fast:>10.1f}")


if __name__ == "__main__":
    main()
