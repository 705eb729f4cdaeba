#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot paths (amplitude RK4 loop, far-field phase sum) at the
headline problem size on both backends and prints the timings.  The numba
path requires numba to be importable; run with RYD_NUMBA=0 to check which
backend the package itself would select.
"""

import time

import numpy as np

from rydsource import kernels


def _timeit(fn, *args, repeat=3):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_phase_sum(n_atoms=1000, n_dirs=32768, seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n_atoms, 3)) * np.array([1.0, 1.0, 6.0])
    weights = (rng.normal(size=n_atoms) + 1j * rng.normal(size=n_atoms)) / np.sqrt(n_atoms)
    q = rng.normal(size=(n_dirs, 3)) * 8.0
    rows = []
    t_np, ref = _timeit(kernels.phase_sum_numpy, weights, pos, q)
    rows.append(("numpy", t_np))
    if kernels.NUMBA_AVAILABLE:
        kernels.phase_sum_numba(weights, pos, q[:8])  # compile
        t_nb, out = _timeit(kernels.phase_sum_numba, weights, pos, q)
        rows.append(("numba", t_nb))
        assert np.allclose(out, ref, atol=1e-10)
    return rows


def bench_prep(n_atoms=1000, n_steps=6000, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n_atoms) * 20.0
    off1 = -(d**2) / 590.6
    omega_nodes = np.abs(np.sin(np.linspace(0, 3, 2 * n_steps + 1))) * 62.8
    delta_nodes = np.linspace(-188.5, 188.5, 2 * n_steps + 1)
    noise = rng.standard_normal((n_steps, n_atoms)) * 8.9
    c0 = np.zeros(n_atoms + 1, np.complex128)
    c0[0] = 1.0
    samples = np.arange(0, n_steps + 1, 40, dtype=np.int64)
    if samples[-1] != n_steps:
        samples = np.append(samples, np.int64(n_steps))
    args = (
        c0, d, off1, 1.0 / 590.6, 1.0, 0.0, 590.6,
        omega_nodes, delta_nodes, noise, 0.01, 2.5e-4, samples,
    )
    rows = []
    t_np, ref = _timeit(lambda: kernels.prep_rk4_numpy(*args))
    rows.append(("numpy", t_np))
    if kernels.NUMBA_AVAILABLE:
        kernels.prep_rk4_numba(*args)  # compile
        t_nb, out = _timeit(lambda: kernels.prep_rk4_numba(*args))
        rows.append(("numba", t_nb))
        assert np.allclose(out[3], ref[3], atol=1e-10)
    return rows


def main():
    print(f"selected backend: {kernels.backend_name()}")
    print("\nphase sum (1000 atoms x 32768 directions)")
    for name, t in bench_phase_sum():
        print(f"  {name:6s} {t * 1e3:9.1f} ms")
    print("\npreparation RK4 (1000 atoms x 6000 steps, noise on)")
    for name, t in bench_prep():
        print(f"  {name:6s} {t * 1e3:9.1f} ms")


if __name__ == "__main__":
    main()
