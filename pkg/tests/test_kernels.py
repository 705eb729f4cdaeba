import os
import subprocess
import sys

import numpy as np
import pytest

from rydsource import kernels


def _prep_args(n_atoms=12, n_steps=400, noisy=True, seed=3):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n_atoms) * 10.0
    off1 = -(d**2) / 590.0
    omega = np.abs(np.sin(np.linspace(0.0, 2.0, 2 * n_steps + 1))) * 30.0
    delta = np.linspace(-30.0, 30.0, 2 * n_steps + 1)
    noise = (
        rng.standard_normal((n_steps, n_atoms)) * 3.0
        if noisy
        else np.zeros((0, n_atoms))
    )
    c0 = np.zeros(n_atoms + 1, np.complex128)
    c0[0] = 1.0
    samples = np.arange(0, n_steps + 1, 50, dtype=np.int64)
    if samples[-1] != n_steps:
        samples = np.append(samples, np.int64(n_steps))
    return (
        c0, d, off1, 1.0 / 590.0, 1.0, 0.0, 590.0,
        omega, delta, noise, 0.02, 5e-4, samples,
    )


def test_numpy_phase_sum_matches_naive_loop(rng):
    n, m = 20, 37
    pos = rng.normal(size=(n, 3)) * 4.0
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    q = rng.normal(size=(m, 3))
    naive = np.array(
        [sum(w[j] * np.exp(1j * q[d] @ pos[j]) for j in range(n)) for d in range(m)]
    )
    out = kernels.phase_sum_numpy(w, pos, q)
    assert np.max(np.abs(out - naive)) < 1e-12


@pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not importable")
def test_backends_agree_phase_sum(rng):
    pos = rng.normal(size=(64, 3)) * 4.0
    w = rng.normal(size=64) + 1j * rng.normal(size=64)
    q = rng.normal(size=(101, 3))
    a = kernels.phase_sum_numpy(w, pos, q)
    b = kernels.phase_sum_numba(w, pos, q)
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not importable")
@pytest.mark.parametrize("noisy", [False, True])
def test_backends_agree_prep_loop(noisy):
    args = _prep_args(noisy=noisy)
    pg_a, ps_a, lost_a, c_a = kernels.prep_rk4_numpy(*args)
    pg_b, ps_b, lost_b, c_b = kernels.prep_rk4_numba(*args)
    assert np.max(np.abs(c_a - c_b)) < 1e-12
    assert np.max(np.abs(ps_a - ps_b)) < 1e-13
    assert np.max(np.abs(lost_a - lost_b)) < 1e-14


def test_prep_loop_samples_cover_endpoints():
    args = _prep_args(noisy=False)
    pg, ps, lost, _ = kernels.prep_rk4(*args)
    assert pg[0] == 1.0 and ps[0] == 0.0 and lost[0] == 0.0
    assert len(pg) == len(args[-1])


def test_env_flag_selects_numpy_backend():
    code = "from rydsource import kernels; print(kernels.backend_name())"
    env = dict(os.environ, RYD_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0
    assert out.stdout.strip() == "numpy"
