#!/usr/bin/env python3
"""Benchmark the numba and pure-numpy grid kernels against each other.

Runs the phase-field energy/gradient kernel on a few grid sizes, reports
per-call timings for both paths and verifies they agree to roundoff.
The active default path follows VDEEPONET_NUMBA (auto-detect when unset).

Usage: python3 benchmarks/bench_kernels.py [--sizes 32,64,128] [--repeats 50]
"""

import argparse
import time

import numpy as np

from vdeeponet._kernels import (numba_available, numba_enabled,
                                pf_energy_grad_numba, pf_energy_grad_numpy)


def _state(n, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.normal(scale=1e-3, size=(n, n)),
            rng.normal(scale=1e-3, size=(n, n)),
            rng.uniform(0.0, 1.0, size=(n, n)),
            rng.uniform(0.0, 20.0, size=(n, n)))


def _time(fn, args, repeats):
    fn(*args)  # warm-up (JIT compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="32,64,128")
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"numba available: {numba_available()}; "
          f"active default: {'numba' if numba_enabled() else 'numpy'}")
    material = (121.15, 80.77, 2.7e-3, 0.0625)
    for n in sizes:
        u, v, phi, hist = _state(n)
        call_args = (u, v, phi, hist, 1.0 / (n - 1), *material)
        t_np = _time(pf_energy_grad_numpy, call_args, args.repeats)
        line = f"{n:4d}x{n:<4d} numpy {t_np * 1e3:8.3f} ms"
        if numba_available():
            t_nb = _time(pf_energy_grad_numba, call_args, args.repeats)
            e_np, gu_np, gv_np, gp_np = pf_energy_grad_numpy(*call_args)
            e_nb, gu_nb, gv_nb, gp_nb = pf_energy_grad_numba(*call_args)
            drift = max(abs(e_np - e_nb),
                        float(np.max(np.abs(gu_np - gu_nb))),
                        float(np.max(np.abs(gv_np - gv_nb))),
                        float(np.max(np.abs(gp_np - gp_nb))))
            line += (f" | numba {t_nb * 1e3:8.3f} ms | speedup "
                     f"{t_np / t_nb:5.1f}x | max deviation {drift:.2e}")
        print(line)


if __name__ == "__main__":
    main()
