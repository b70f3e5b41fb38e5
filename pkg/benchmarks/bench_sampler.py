"""Throughput of the Monte Carlo sampler: numba kernel vs pure numpy.

Usage: python benchmarks/bench_sampler.py [--runs N] [--repeats R]
"""

import argparse
import time

import numpy as np

from wcfsim._kernels import HAVE_NUMBA
from wcfsim.montecarlo import NoiseModel, scenario, simulate
from wcfsim.optics import PathEfficiencies


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    eff = PathEfficiencies.reference_setup()
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    for phase_walk in (0.0, 1e-4):
        noise = NoiseModel.from_rates(phase_walk_std=phase_walk)
        setup, _ = scenario("honest", eff, 0.96, noise)
        label = "walking phase" if phase_walk else "constant phase"
        print(f"{args.runs:,} heralded runs, {label}")
        results = {}
        for backend in backends:
            if backend == "numba":
                t0 = time.perf_counter()
                simulate(setup, 1_000, seed=0, backend=backend)
                print(f"  numba first call (compile or cache load): {time.perf_counter() - t0:.2f} s")
            elapsed, batch = best_time(
                lambda: simulate(setup, args.runs, seed=1, backend=backend), args.repeats
            )
            results[backend] = (elapsed, batch)
            print(f"  {backend:<6} {elapsed:8.3f} s  {args.runs / elapsed / 1e6:7.2f} M runs/s")
        if len(results) == 2:
            a, b = results["numpy"][1], results["numba"][1]
            same = all(np.array_equal(getattr(a, c), getattr(b, c))
                       for c in ("herald", "b", "a", "v1", "v2", "photons"))
            speedup = results["numpy"][0] / results["numba"][0]
            print(f"  speedup {speedup:.1f}x, identical records: {same}")


if __name__ == "__main__":
    main()
