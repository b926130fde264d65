"""Benchmark the hot kernels: numba @njit vs the pure-numpy fallback.

Run with:  python benchmarks/bench_kernels.py
The active backend for normal runs is chosen by SOQN_BACKEND (auto|numba|numpy);
this script times both implementations side by side when numba is available.
"""
import time

import numpy as np

from soqn._kernels import HAS_NUMBA, TOEPLITZ_IMPLS, TRANSMIT_IMPLS, backend_name
from soqn.rng import RandomStream

REPS = 5


def time_best(fn, *args):
    best = float("inf")
    for _ in range(REPS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def transmit_args(n):
    rng = RandomStream(1, "bench-transmit")
    return (np.ones(n, dtype=np.uint8), rng.bits(n), rng.bits(n), rng.bits(n),
            0.5, 1e-4, 0.01,
            rng.uniforms(n), rng.uniforms(n), rng.uniforms(n),
            rng.uniforms(n), rng.uniforms(n))


def toeplitz_args(n, m):
    rng = RandomStream(2, "bench-toeplitz")
    return rng.bits(n), rng.bits(n + m - 1), m


def main():
    print(f"active backend: {backend_name()}   (numba available: {HAS_NUMBA})")
    n_pulses = 2_000_000
    t_args = transmit_args(n_pulses)
    print(f"\ntransmit kernel, {n_pulses:,} pulses (best of {REPS}):")
    results = {}
    for name, fn in TRANSMIT_IMPLS.items():
        fn(*transmit_args(1024))  # trigger JIT outside the timed region
        results[name] = time_best(fn, *t_args)
        rate = n_pulses / results[name] / 1e6
        print(f"  {name:<6} {results[name] * 1e3:8.1f} ms   {rate:7.1f} Mpulse/s")
    if len(results) == 2:
        print(f"  speedup numba/numpy: {results['numpy'] / results['numba']:.2f}x")

    n_key, m_out = 20_000, 14_000
    z_args = toeplitz_args(n_key, m_out)
    print(f"\ntoeplitz hash, {n_key:,} -> {m_out:,} bits (best of {REPS}):")
    results = {}
    for name, fn in TOEPLITZ_IMPLS.items():
        fn(*toeplitz_args(256, 128))
        results[name] = time_best(fn, *z_args)
        print(f"  {name:<6} {results[name] * 1e3:8.1f} ms")
    if len(results) == 2:
        print(f"  speedup numba/numpy: {results['numpy'] / results['numba']:.2f}x")

    # cross-check: identical outputs regardless of backend
    if HAS_NUMBA:
        a = TRANSMIT_IMPLS["numpy"](*t_args)
        b = TRANSMIT_IMPLS["numba"](*t_args)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert np.array_equal(TOEPLITZ_IMPLS["numpy"](*z_args),
                              TOEPLITZ_IMPLS["numba"](*z_args))
        print("\ncross-check: backends agree bit for bit")


if __name__ == "__main__":
    main()
