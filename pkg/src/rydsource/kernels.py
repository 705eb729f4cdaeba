"""Hot numerical kernels with a numba backend and a pure-numpy fallback.

Two inner loops dominate runtime: the fixed-step RK4 propagation of the
coupled source/ensemble amplitudes, and the phase sum over atoms that
builds the far-field photon amplitude on a direction grid.  Both exist in
a scalar form compiled with ``numba.njit`` and a vectorized numpy form.

Backend selection: the environment variable ``RYD_NUMBA`` picks the
implementation at import time ("0"/"off"/"numpy" forces the numpy path,
anything else uses numba when importable).  ``benchmarks/bench_kernels.py``
times the two paths against each other.

Kernel semantics (amplitude equations, all rates rad/us, times us):

    dc0/dt = i * sum_j conj(Dt_j) c_j
    dcj/dt = (i det_j - gamma_s/2) c_j + i Dt_j c0
    dL/dt  = gamma_s * sum_j |c_j|^2

with stage-dependent drive Dt_j = -d_j * omega(t)/delta_big * e^{i phi} and
detuning det_j = delta(t) + off1_j + off2 * omega(t)^2 + noise_j(step).
The per-step noise is held constant across the four RK4 stages.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "JIT_ENABLED",
    "NUMBA_AVAILABLE",
    "backend_name",
    "phase_sum",
    "phase_sum_numpy",
    "prep_rk4",
    "prep_rk4_numpy",
]


# --------------------------------------------------------------------------
# pure-numpy implementations
# --------------------------------------------------------------------------

def phase_sum_numpy(weights, positions, qvecs, chunk: int = 4096):
    """sum_j weights[j] * exp(i q . r_j) for every row q of ``qvecs``.

    weights: complex (N,), positions: (N, 3) um, qvecs: (M, 3) 1/um.
    Evaluated in direction chunks to bound the (N, chunk) phase matrix.
    """
    weights = np.ascontiguousarray(weights, dtype=np.complex128)
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    qvecs = np.ascontiguousarray(qvecs, dtype=np.float64)
    m = qvecs.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for start in range(0, m, chunk):
        q = qvecs[start : start + chunk]
        phase = positions @ q.T
        out[start : start + chunk] = weights @ np.exp(1j * phase)
    return out


def _rhs_numpy(c0, c, w, dl, d, off1, off2, noise_step, gamma_s, phase, delta_big):
    coupling = (-w / delta_big) * d * phase
    det = dl + off1 + off2 * w * w
    if noise_step is not None:
        det = det + noise_step
    k0 = 1j * np.sum(np.conj(coupling) * c)
    kc = (1j * det - 0.5 * gamma_s) * c + 1j * coupling * c0
    kl = gamma_s * float(np.sum(np.abs(c) ** 2))
    return k0, kc, kl


def prep_rk4_numpy(
    c_init,
    d,
    off1,
    off2,
    phase_re,
    phase_im,
    delta_big,
    omega_nodes,
    delta_nodes,
    noise,
    gamma_s,
    dt,
    sample_steps,
):
    """Vectorized RK4 propagation; same contract as the numba kernel."""
    c_init = np.asarray(c_init, dtype=np.complex128)
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    nsteps = (len(omega_nodes) - 1) // 2
    phase = complex(phase_re, phase_im)
    has_noise = noise.shape[0] > 0

    nsamp = len(sample_steps)
    p_g = np.empty(nsamp)
    p_s = np.empty(nsamp)
    lost = np.empty(nsamp)

    c0 = complex(c_init[0])
    c = c_init[1:].copy()
    L = 0.0

    ptr = 0
    for step in range(nsteps + 1):
        if ptr < nsamp and sample_steps[ptr] == step:
            p_g[ptr] = abs(c0) ** 2
            p_s[ptr] = float(np.sum(np.abs(c) ** 2))
            lost[ptr] = L
            ptr += 1
        if step == nsteps:
            break
        ns = noise[step] if has_noise else None
        w0, w1, w2 = (
            omega_nodes[2 * step],
            omega_nodes[2 * step + 1],
            omega_nodes[2 * step + 2],
        )
        d0, d1, d2 = (
            delta_nodes[2 * step],
            delta_nodes[2 * step + 1],
            delta_nodes[2 * step + 2],
        )
        a0, ac, al = _rhs_numpy(
            c0, c, w0, d0, d, off1, off2, ns, gamma_s, phase, delta_big
        )
        b0, bc, bl = _rhs_numpy(
            c0 + 0.5 * dt * a0, c + 0.5 * dt * ac, w1, d1, d, off1, off2, ns,
            gamma_s, phase, delta_big,
        )
        g0, gc, gl = _rhs_numpy(
            c0 + 0.5 * dt * b0, c + 0.5 * dt * bc, w1, d1, d, off1, off2, ns,
            gamma_s, phase, delta_big,
        )
        h0, hc, hl = _rhs_numpy(
            c0 + dt * g0, c + dt * gc, w2, d2, d, off1, off2, ns, gamma_s,
            phase, delta_big,
        )
        c0 = c0 + dt / 6.0 * (a0 + 2.0 * b0 + 2.0 * g0 + h0)
        c = c + dt / 6.0 * (ac + 2.0 * bc + 2.0 * gc + hc)
        L = L + dt / 6.0 * (al + 2.0 * bl + 2.0 * gl + hl)

    c_final = np.empty(n + 1, dtype=np.complex128)
    c_final[0] = c0
    c_final[1:] = c
    return p_g, p_s, lost, c_final


# --------------------------------------------------------------------------
# numba implementations (scalar loops; compiled lazily on first call)
# --------------------------------------------------------------------------

def _phase_sum_impl(weights, positions, qvecs):
    m = qvecs.shape[0]
    n = positions.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for idx in range(m):
        qx = qvecs[idx, 0]
        qy = qvecs[idx, 1]
        qz = qvecs[idx, 2]
        sr = 0.0
        si = 0.0
        for j in range(n):
            ph = qx * positions[j, 0] + qy * positions[j, 1] + qz * positions[j, 2]
            cph = np.cos(ph)
            sph = np.sin(ph)
            wr = weights[j].real
            wi = weights[j].imag
            sr += wr * cph - wi * sph
            si += wr * sph + wi * cph
        out[idx] = complex(sr, si)
    return out


def _prep_rk4_impl(
    c_init,
    d,
    off1,
    off2,
    phase_re,
    phase_im,
    delta_big,
    omega_nodes,
    delta_nodes,
    noise,
    gamma_s,
    dt,
    sample_steps,
):
    n = d.shape[0]
    nsteps = (omega_nodes.shape[0] - 1) // 2
    has_noise = noise.shape[0] > 0
    phase = complex(phase_re, phase_im)
    phase_conj = complex(phase_re, -phase_im)
    g2 = 0.5 * gamma_s

    nsamp = sample_steps.shape[0]
    p_g = np.empty(nsamp)
    p_s = np.empty(nsamp)
    lost = np.empty(nsamp)

    c = c_init.copy()
    L = 0.0
    k = np.empty(n + 1, dtype=np.complex128)
    y = np.empty(n + 1, dtype=np.complex128)
    acc = np.empty(n + 1, dtype=np.complex128)
    kl = 0.0
    accl = 0.0
    yl = 0.0

    ptr = 0
    for step in range(nsteps + 1):
        if ptr < nsamp and sample_steps[ptr] == step:
            tot = 0.0
            for j in range(n):
                cj = c[1 + j]
                tot += cj.real * cj.real + cj.imag * cj.imag
            p_g[ptr] = c[0].real * c[0].real + c[0].imag * c[0].imag
            p_s[ptr] = tot
            lost[ptr] = L
            ptr += 1
        if step == nsteps:
            break
        for stage in range(4):
            if stage == 0:
                node = 2 * step
                src = c
                src_l = L
            elif stage == 3:
                node = 2 * step + 2
                src = y
                src_l = yl
            else:
                node = 2 * step + 1
                src = y
                src_l = yl
            w = omega_nodes[node]
            dl = delta_nodes[node]
            scale = -w / delta_big
            w2 = w * w
            s0 = complex(0.0, 0.0)
            tot = 0.0
            for j in range(n):
                dj = d[j]
                cj = src[1 + j]
                det = dl + off1[j] + off2 * w2
                if has_noise:
                    det += noise[step, j]
                coupling = scale * dj * phase
                k[1 + j] = (complex(-g2, det)) * cj + 1j * coupling * src[0]
                s0 += (scale * dj) * cj
                tot += cj.real * cj.real + cj.imag * cj.imag
            k[0] = 1j * phase_conj * s0
            kl = gamma_s * tot
            if stage == 0:
                for j in range(n + 1):
                    acc[j] = k[j]
                    y[j] = c[j] + 0.5 * dt * k[j]
                accl = kl
                yl = L + 0.5 * dt * kl
            elif stage == 1:
                for j in range(n + 1):
                    acc[j] += 2.0 * k[j]
                    y[j] = c[j] + 0.5 * dt * k[j]
                accl += 2.0 * kl
                yl = L + 0.5 * dt * kl
            elif stage == 2:
                for j in range(n + 1):
                    acc[j] += 2.0 * k[j]
                    y[j] = c[j] + dt * k[j]
                accl += 2.0 * kl
                yl = L + dt * kl
            else:
                sixth = dt / 6.0
                for j in range(n + 1):
                    c[j] = c[j] + sixth * (acc[j] + k[j])
                L = L + sixth * (accl + kl)
    return p_g, p_s, lost, c


# --------------------------------------------------------------------------
# backend selection
# --------------------------------------------------------------------------

def _numba_requested() -> bool:
    value = os.environ.get("RYD_NUMBA", "auto").strip().lower()
    return value not in ("0", "false", "off", "numpy")


NUMBA_AVAILABLE = False
phase_sum_numba = None
prep_rk4_numba = None

if _numba_requested():
    try:
        from numba import njit
    except ImportError:
        NUMBA_AVAILABLE = False
    else:
        NUMBA_AVAILABLE = True
        phase_sum_numba = njit(cache=True, nogil=True)(_phase_sum_impl)
        prep_rk4_numba = njit(cache=True, nogil=True)(_prep_rk4_impl)

JIT_ENABLED = NUMBA_AVAILABLE

if JIT_ENABLED:
    phase_sum = phase_sum_numba
    prep_rk4 = prep_rk4_numba
else:
    phase_sum = phase_sum_numpy
    prep_rk4 = prep_rk4_numpy


def backend_name() -> str:
    return "numba" if JIT_ENABLED else "numpy"
