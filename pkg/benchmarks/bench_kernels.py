"""Timing comparison of the hot kernels: compiled extension vs pure python.

Usage:
    python3 benchmarks/bench_kernels.py [--paths N] [--steps N] [--repeat N]

Reports best-of-N wall times for the counter RNG, the batched tridiagonal
solve, a single Euler step, and an end-to-end path simulation.
"""
import argparse
import time

import numpy as np

from arbubble._kernels import available_backends, get_backend
from arbubble.model import GaussianBubble, MarketParams
from arbubble.montecarlo import RngSpec, simulate


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(backend, n_paths, steps, repeat):
    out = {}
    out["philox_normals"] = best_of(
        lambda: backend.philox_normals(12345, 7, 0, n_paths), repeat)

    rng = np.random.default_rng(0)
    m, n = 64, 201
    dl = rng.uniform(-1.0, 0.0, (m, n))
    du = rng.uniform(-1.0, 0.0, (m, n))
    d = 4.0 + rng.uniform(0.0, 1.0, (m, n))
    b = rng.normal(size=(m, n))
    out["thomas_batch"] = best_of(
        lambda: backend.thomas_batch(dl.copy(), d.copy(), du.copy(),
                                     b.copy()), repeat)

    lnS = np.full(n_paths, np.log(10.0))
    f = np.full(n_paths, 0.1)
    A = np.zeros(n_paths)
    absorbed = np.zeros(n_paths, dtype=bool)
    z = backend.philox_normals(1, 0, 0, n_paths)
    out["step_gaussian"] = best_of(
        lambda: backend.step_gaussian(lnS.copy(), f.copy(), A.copy(),
                                      absorbed.copy(), z, 1.0 / steps, 0.8,
                                      0.4, 0.2, 0.0, 0.05, 0.3996, 0.4004,
                                      True), repeat)
    return out


def bench_simulate(name, n_paths, steps, repeat):
    params = MarketParams(mu=0.8, sigma=0.4, r=0.2)
    bub = GaussianBubble(0.0, 0.05)
    return best_of(
        lambda: simulate(params, bub, 10.0, 0.1, 1.0, steps, n_paths,
                         RngSpec(42), backend_name=name), repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = available_backends()
    print("backends: %s   (paths=%d, steps=%d, best of %d)"
          % (", ".join(names), args.paths, args.steps, args.repeat))
    results = {}
    for name in names:
        results[name] = bench_backend(get_backend(name), args.paths,
                                      args.steps, args.repeat)
        results[name]["simulate"] = bench_simulate(name, args.paths,
                                                   args.steps, args.repeat)

    kernels = ["philox_normals", "thomas_batch", "step_gaussian", "simulate"]
    width = max(len(k) for k in kernels)
    header = "%-*s" % (width, "kernel")
    for name in names:
        header += "  %12s" % (name + " [s]")
    both = "compiled" in results and "python" in results
    if both:
        header += "  %16s" % "python/compiled"
    print(header)
    for kernel in kernels:
        row = "%-*s" % (width, kernel)
        for name in names:
            row += "  %12.6f" % results[name][kernel]
        if both:
            row += "  %15.2fx" % (results["python"][kernel]
                                  / results["compiled"][kernel])
        print(row)


if __name__ == "__main__":
    main()
