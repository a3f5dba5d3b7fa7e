"""Benchmark the compiled pointwise reaction kernel against the batched
numpy fallback, plus an end-to-end sweep timing.

Usage: python benchmarks/bench_kernels.py [--grid-n N]
"""

import argparse
import time

import numpy as np

import dcsplit as d
from dcsplit.subsolvers import compiled_kernel_available


def timeit(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid-n", type=int, default=201)
    ap.add_argument("--spin-up", type=float, default=0.25)
    args = ap.parse_args()

    print(f"compiled kernel available: {compiled_kernel_available()}")
    prob = d.bz_problem(args.grid_n, spin_up=args.spin_up)
    u0 = prob.initial_state
    cfg = d.SubsolverConfig(rtol=1e-5, atol=1e-5)

    backends = ["python"] + (["compiled"] if compiled_kernel_available() else [])
    print(f"\npointwise reaction advance, n = {args.grid_n} points")
    print(f"{'dt':>8} " + " ".join(f"{b:>12}" for b in backends) + f" {'speedup':>9}")
    for dt in (1e-5, 1e-4, 1e-3):
        times = {}
        for backend in backends:
            prop = d.reaction_propagator(prob, cfg, backend=backend)
            times[backend] = timeit(lambda: prop.advance(u0, 0.0, dt))
        row = f"{dt:8.0e} " + " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f" {times['python'] / times['compiled']:8.1f}x"
        print(row)

    print(f"\none full correction sweep (initial + 3 corrections), dt = 2e-4")
    for backend in backends:
        sw = d.DcsSweeper.for_problem(prob, d.LIE, cfg, backend=backend)

        def one_step():
            st = sw.initial_sweep(u0, 0.0, 2e-4)
            for _ in range(3):
                st = sw.correction_sweep(st)

        print(f"  {backend:>9}: {timeit(one_step, repeat=3) * 1e3:9.2f}ms")

    if len(backends) == 2:
        a = d.reaction_propagator(prob, cfg, backend="compiled").advance(u0, 0.0, 1e-3)
        b = d.reaction_propagator(prob, cfg, backend="python").advance(u0, 0.0, 1e-3)
        scale = cfg.atol + cfg.rtol * np.abs(a)
        print(f"\nbackend agreement (scaled max diff): {np.max(np.abs(a - b) / scale):.2e}")


if __name__ == "__main__":
    main()
