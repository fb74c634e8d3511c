"""Time the compiled and numpy replication kernels on the same workload.

Usage: python benchmarks/bench_kernels.py [--n-cases N] [--n-reps R] [--p P ...]

Both backends consume identical random streams, so the script also reports
the largest difference in per-replication correlations.
"""

import argparse
import time

import numpy as np

from fsdet import ModelSpec, SimulationConfig, available_backends, simulate


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-cases", type=int, default=100_000)
    parser.add_argument("--n-reps", type=int, default=5)
    parser.add_argument("--p", type=int, nargs="+", default=[5, 10, 20])
    parser.add_argument("--mode", default="none")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'p':>4} {'backend':>8} {'best s':>9} {'cases/s':>12} {'max |diff|':>11}")
    for p in args.p:
        cfg = SimulationConfig(ModelSpec.equal(p, 0.6, 0.5), n_cases=args.n_cases,
                               n_reps=args.n_reps, seed=1, elimination_mode=args.mode)
        results = {}
        for backend in backends:
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[backend] = simulate(cfg, backend=backend)
                best = min(best, time.perf_counter() - t0)
            ref = np.array(results[backends[0]].rho_per_rep)
            diff = np.abs(np.array(results[backend].rho_per_rep) - ref).max()
            rate = args.n_cases * args.n_reps / best
            print(f"{p:>4} {backend:>8} {best:>9.3f} {rate:>12.3g} {diff:>11.1e}")


if __name__ == "__main__":
    main()
