"""Benchmark the jitted kernels against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1024,16384,131072] [--repeats 5]

Toggles the PBICM_NO_NUMBA environment flag in-process, so both code paths
run in the same interpreter on identical inputs and the outputs are checked
to agree before timings are reported.
"""
from __future__ import annotations

import argparse
import os
import time

import numpy as np

from pbicm import kernels
from pbicm.channel import make_rng
from pbicm.constellation import make_constellation
from pbicm.subchannel import LLR_MAX, label_sets


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_llr(n: int, repeats: int):
    cons = make_constellation("QAM64")
    sets = label_sets(cons.L)
    rng = make_rng(0)
    y = rng.normal(size=n) + 1j * rng.normal(size=n)
    h = rng.normal(size=n) + 1j * rng.normal(size=n)

    def run():
        return kernels.llr_batch(y, h, cons.symbols, 0.3, sets, LLR_MAX)

    os.environ["PBICM_NO_NUMBA"] = "1"
    ref = run()
    t_np = best_of(run, repeats)
    os.environ["PBICM_NO_NUMBA"] = "0"
    if not kernels.numba_enabled():
        return t_np, None
    got = run()
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9)
    t_nb = best_of(run, repeats)
    return t_np, t_nb


def bench_e0(k: int, repeats: int):
    rng = make_rng(1)
    ld0 = -rng.random(k) * 30
    ld1 = -rng.random(k) * 30
    w = rng.random(k)
    w /= w.sum()

    def run():
        return kernels.e0_binary_integral(ld0, ld1, w, 0.7)

    os.environ["PBICM_NO_NUMBA"] = "1"
    ref = run()
    t_np = best_of(run, repeats)
    os.environ["PBICM_NO_NUMBA"] = "0"
    if not kernels.numba_enabled():
        return t_np, None
    got = run()
    assert abs(got - ref) <= 1e-12 * abs(ref)
    t_nb = best_of(run, repeats)
    return t_np, t_nb


def row(label, size, t_np, t_nb):
    if t_nb is None:
        print(f"{label:>12} {size:>9} {t_np * 1e3:>11.2f} {'n/a':>11} {'n/a':>8}")
    else:
        print(
            f"{label:>12} {size:>9} {t_np * 1e3:>11.2f} {t_nb * 1e3:>11.2f} {t_np / t_nb:>7.1f}x"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1024,16384,131072")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(v) for v in args.sizes.split(",")]

    kernels.warmup()
    print(f"{'kernel':>12} {'size':>9} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for n in sizes:
        row("llr_batch", n, *bench_llr(n, args.repeats))
    for k in sizes:
        row("e0_binary", k, *bench_e0(k, args.repeats))


if __name__ == "__main__":
    main()
