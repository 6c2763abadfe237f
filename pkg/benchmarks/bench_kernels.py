"""Compare the compiled and pure-Python trajectory kernels.

Usage: python3 benchmarks/bench_kernels.py [--T 100 200 400] [--d 2 4] [--repeat 3]
"""

import argparse
import time

import numpy as np

from perpetua import _pykernels

try:
    from perpetua import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def draws(T, d, seed):
    g = np.random.default_rng(seed)
    Ms = g.normal(scale=0.6 / np.sqrt(d), size=(T, d, d))
    Zs = g.normal(size=(T, d))
    return Ms, Zs, np.zeros(d)


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_log_gap(a, b):
    fin = np.isfinite(a) & np.isfinite(b)
    if not np.array_equal(np.isfinite(a), np.isfinite(b)):
        return float("inf")
    return float(np.max(np.abs(a[fin] - b[fin]), initial=0.0))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--d", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--no-suffix", action="store_true")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled backend not built; run: python3 setup.py build_ext --inplace")
        return 1
    suffix = not args.no_suffix
    print(f"{'d':>3} {'T':>6} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max |dlog|':>11}")
    for d in args.d:
        for T in args.T:
            Ms, Zs, z0 = draws(T, d, seed=T * 31 + d)
            tp, rp = best_of(lambda: _pykernels.trajectory(Ms, Zs, z0, suffix), args.repeat)
            tc, rc = best_of(lambda: _ckernels.trajectory(Ms, Zs, z0, suffix), args.repeat)
            gap = max(max_log_gap(rp[k], rc[k]) for k in ("w_log", "y_log", "u_log"))
            print(f"{d:>3} {T:>6} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f} {gap:>11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
