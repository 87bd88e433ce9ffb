"""Timing comparison of the pure numpy and compiled numeric kernels.

Runs each hot kernel on representative workloads with both backends and
prints a small table. Usage:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from pointchannels import _kernels_py as pyk

try:
    from pointchannels import _kernels_cy as cyk
except ImportError:
    cyk = None


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeat):
    rng = np.random.default_rng(4057)
    rows = []

    fw = rng.normal(size=200000) + 1j * rng.normal(size=200000)
    rho = np.exp(-0.003 + 0.001j)
    rows.append(("exp_smooth 200k", lambda k: k.exp_smooth(fw, rho)))

    ks = np.linspace(0.0, 40.0, 500000)
    rows.append(("kp_disc 500k", lambda k: k.kp_disc(1.7, np.pi, ks)))

    n = 3
    z = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    lmat = np.eye(2 * n) - u
    mmat = 1j * (np.eye(2 * n) + u)
    kk = np.sqrt(np.linspace(0.01, 30.0, 400).astype(np.complex128))
    thetas = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    rows.append(
        (
            "floquet grid 400x64 (n=3)",
            lambda k: k.floquet_absdet_grid(lmat, mmat, np.pi, n, kk, thetas),
        )
    )
    pair_k = np.repeat(kk, 8)
    pair_t = np.tile(thetas[:8], 400)
    rows.append(
        (
            "floquet pairs 3200 (n=3)",
            lambda k: k.floquet_absdet_pairs(lmat, mmat, np.pi, n, pair_k, pair_t),
        )
    )

    print("%-28s %12s %12s %8s" % ("kernel", "python", "cython", "speedup"))
    for name, fn in rows:
        t_py = timeit(lambda: fn(pyk), repeat)
        if cyk is None:
            print("%-28s %10.3f ms %12s" % (name, 1e3 * t_py, "n/a"))
            continue
        t_cy = timeit(lambda: fn(cyk), repeat)
        a = fn(pyk)
        b = fn(cyk)
        if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
            raise AssertionError("backend results differ for %s" % name)
        print(
            "%-28s %10.3f ms %10.3f ms %7.1fx"
            % (name, 1e3 * t_py, 1e3 * t_cy, t_py / t_cy)
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions per kernel")
    args = parser.parse_args()
    if cyk is None:
        print("compiled backend not available; timing pure python only")
    bench(args.repeat)


if __name__ == "__main__":
    main()
