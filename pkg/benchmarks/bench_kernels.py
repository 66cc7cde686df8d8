"""Compare the compiled and pure-Python kernel backends.

Times the lattice DP and the Monte Carlo walk kernels on both backends and
checks that their outputs are bit-identical (the contract that makes the
backend choice invisible to results).

Run:  python benchmarks/bench_kernels.py [--quick]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from memwalk import ConstantCoupling, GaussianWellCoupling, backend
from memwalk.lattice import evolve
from memwalk.montecarlo import sample_ensemble, estimate_autocorr


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller problem sizes, fewer repeats")
    args = parser.parse_args()

    try:
        backend.get_kernels("compiled")
    except Exception as exc:
        raise SystemExit(f"compiled backend unavailable ({exc}); "
                         f"build it first: pip install -e . --no-build-isolation")

    repeats = 2 if args.quick else 4
    dp_sizes = (1000, 4000) if args.quick else (1000, 4000, 10000)
    mc_cases = [(100, 20_000), (1000, 5_000)] if args.quick else \
        [(100, 100_000), (1000, 20_000), (5000, 5_000)]

    print(f"{'case':<34}{'python':>10}{'compiled':>10}{'speedup':>9}")

    for n in dp_sizes:
        profile = GaussianWellCoupling(2.5 / n, 0.4, 0.1 * n)
        results = {}
        for name in ("python", "compiled"):
            results[name] = evolve(n, profile, backend_name=name)[0].probs
            dt = _time(lambda nm=name: evolve(n, profile, backend_name=nm),
                       repeats)
            results[name + "_t"] = dt
        assert np.array_equal(results["python"], results["compiled"])
        print(f"{'dp_evolve N=%d' % n:<34}"
              f"{results['python_t']:>10.4f}{results['compiled_t']:>10.4f}"
              f"{results['python_t'] / results['compiled_t']:>8.1f}x")

    for n, walks in mc_cases:
        profile = ConstantCoupling(0.4 / n)
        stats = {}
        for name in ("python", "compiled"):
            stats[name] = sample_ensemble(n, profile, walks, 42,
                                          backend_name=name)
            dt = _time(lambda nm=name: sample_ensemble(n, profile, walks, 42,
                                                       backend_name=nm),
                       repeats)
            stats[name + "_t"] = dt
        assert stats["python"].variance.value == stats["compiled"].variance.value
        assert stats["python"].kurtosis.value == stats["compiled"].kurtosis.value
        label = f"ensemble N={n} M={walks}"
        print(f"{label:<34}{stats['python_t']:>10.4f}{stats['compiled_t']:>10.4f}"
              f"{stats['python_t'] / stats['compiled_t']:>8.1f}x")

    n, walks = (200, 10_000) if args.quick else (100, 100_000)
    profile = ConstantCoupling(0.4 / n)
    est = {}
    for name in ("python", "compiled"):
        est[name] = estimate_autocorr(n, profile, 2, walks, 7,
                                      backend_name=name)
        dt = _time(lambda nm=name: estimate_autocorr(n, profile, 2, walks, 7,
                                                     backend_name=nm), repeats)
        est[name + "_t"] = dt
    assert est["python"].estimate.value == est["compiled"].estimate.value
    label = f"autocorr N={n} M={walks}"
    print(f"{label:<34}{est['python_t']:>10.4f}{est['compiled_t']:>10.4f}"
          f"{est['python_t'] / est['compiled_t']:>8.1f}x")
    print("\nall backend outputs bit-identical")


if __name__ == "__main__":
    main()
