"""Time the compiled mirror-Gram core against the pure-numpy twin.

Usage:
    python benchmarks/bench_gram.py [--sizes 256 512 1024] [--repeats 5]

The workload is the hot path of kernel-realized operator blocks: all
derivative slabs (p, q) with p, q <= 2 of the mirror kernel on an n x n
point grid.
"""
import argparse
import time

import numpy as np

from pinn_spectral import _gram, _gram_numpy


def workload(n, rng):
    xr = rng.uniform(0.0, 12.0, size=n)
    xc = rng.uniform(0.0, 12.0, size=n)
    p_ord = np.array([0, 1, 0, 2, 1, 2, 0, 2, 1], dtype=np.int64)
    q_ord = np.array([0, 0, 1, 0, 1, 0, 2, 2, 2], dtype=np.int64)
    return xr, xc, p_ord, q_ord


def best_of(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024, 2048])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not _gram._HAVE_FAST:
        print("compiled core not built; timing the numpy backend only")
    print(f"active backend: {_gram.backend_name()}")
    print(f"{'n':>6} {'numpy (s)':>12} {'compiled (s)':>13} {'speedup':>9}")

    rng = np.random.default_rng(0)
    for n in args.sizes:
        xr, xc, p_ord, q_ord = workload(n, rng)
        call = (xr, xc, 1.0, 0.5, 1.0, p_ord, q_ord)
        t_np, ref = best_of(_gram_numpy.mirror_blocks, call, args.repeats)
        if _gram._HAVE_FAST:
            t_fast, out = best_of(_gram._fastgram.mirror_blocks, call, args.repeats)
            err = np.max(np.abs(out - ref)) / np.max(np.abs(ref))
            if err > 1e-12:
                raise SystemExit(f"backend mismatch at n={n}: rel err {err:.2e}")
            print(f"{n:>6} {t_np:>12.4f} {t_fast:>13.4f} {t_np / t_fast:>8.1f}x")
        else:
            print(f"{n:>6} {t_np:>12.4f} {'-':>13} {'-':>9}")


if __name__ == "__main__":
    main()
