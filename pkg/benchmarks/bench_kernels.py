"""Benchmark the banded Cholesky kernels: compiled extension vs pure NumPy.

Times a factor-and-solve of the plate system [B/D + diag(k)] w = g for a few
grid sizes. Run from the repository root:

    python3 benchmarks/bench_kernels.py --sizes 16,32,64 --repeats 5
"""

import argparse
import time

import numpy as np

from winkler_eki._kernels import band_py
from winkler_eki.grid import Grid
from winkler_eki.plate import PlateModel, assemble_biharmonic, gaussian_load

try:
    from winkler_eki._kernels import _band_c
except ImportError:
    _band_c = None


def plate_system(n, seed=0):
    g = Grid(n)
    ab = assemble_biharmonic(g).band.copy()
    rng = np.random.default_rng(seed)
    ab[0, :] += rng.uniform(0.0, 1e4, size=g.num_interior)
    load = gaussian_load(g, PlateModel()).values
    return ab, load


def best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def factor_and_solve(impl, ab, rhs):
    band = ab.copy()
    info = impl.cholesky_band(band)
    if info:
        raise RuntimeError(f"factorization broke down at column {info}")
    return impl.solve_band(band, rhs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="16,32,64",
                        help="comma-separated grid sizes (default 16,32,64)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions, best is kept (default 5)")
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",") if s]

    if _band_c is None:
        print("compiled extension not available; timing the fallback only")
    header = f"{'n':>5} {'unknowns':>9} {'python':>12}"
    if _band_c is not None:
        header += f" {'c':>12} {'speedup':>8}"
    print(header)
    for n in sizes:
        ab, rhs = plate_system(n)
        t_py = best_of(args.repeats, lambda: factor_and_solve(band_py, ab, rhs))
        row = f"{n:>5} {ab.shape[1]:>9} {t_py:>12.6f}"
        if _band_c is not None:
            t_c = best_of(args.repeats, lambda: factor_and_solve(_band_c, ab, rhs))
            w_py = factor_and_solve(band_py, ab, rhs)
            w_c = factor_and_solve(_band_c, ab, rhs)
            err = np.abs(w_py - w_c).max()
            if not err <= 1e-12 * max(np.abs(w_py).max(), 1.0):
                raise RuntimeError(f"backends disagree at n={n}: {err}")
            row += f" {t_c:>12.6f} {t_py / t_c:>8.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
