"""Conversion of the stored excitation into a directed optical photon.

The retrieved photon amplitude factorizes into a spectral kernel (set by
the control field and the excited-state linewidth) and an angular phase
sum over the atoms carrying the stored grating.  The far field is
evaluated on a Gauss-Legendre x uniform-azimuth sphere with solid-angle
weights; polar cuts through the emission axis are sampled separately at
high angular resolution for line-shape measurements.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .ensemble import CouplingField
from .presets import SpeciesPreset, emission_linewidth, phase_match_wavenumber
from .units import wavelength_nm_to_k_um


class EmissionError(ValueError):
    pass


def wavevectors(species: SpeciesPreset, inclination_rad: float = 0.0):
    """Excitation and control wave vectors (1/um) plus the emission magnitude.

    The excitation beam points along +z; a non-zero inclination tilts the
    control beam in the x-z plane, which shifts the phase-matched grating.
    """
    k0 = np.array([0.0, 0.0, wavelength_nm_to_k_um(species.lambda_excite_nm)])
    kc_mag = wavelength_nm_to_k_um(species.lambda_control_nm)
    kc = kc_mag * np.array(
        [np.sin(inclination_rad), 0.0, np.cos(inclination_rad)]
    )
    return k0, kc, phase_match_wavenumber(species)


# --------------------------------------------------------------------------
# mode grid
# --------------------------------------------------------------------------

@dataclass
class ModeGrid:
    directions: np.ndarray      # (M, 3) unit vectors
    weights: np.ndarray         # (M,) solid-angle weights, sum 4 pi
    cos_theta: np.ndarray       # polar nodes
    phi: np.ndarray             # azimuth nodes
    freqs: np.ndarray           # (F,) detunings from line center, rad/us
    freq_weights: np.ndarray    # trapezoid weights
    k_mag: float                # emission wavenumber, 1/um
    linewidth: float            # w, rad/us

    @classmethod
    def build(
        cls,
        k_mag: float,
        linewidth: float,
        n_polar: int = 128,
        n_azimuth: int = 256,
        n_freq: int = 201,
        window_in_w: float = 20.0,
    ) -> "ModeGrid":
        if n_polar < 2 or n_azimuth < 2 or n_freq < 3:
            raise EmissionError("mode grid is too small")
        if window_in_w < 20.0:
            raise EmissionError("frequency window must cover at least +-20 linewidths")
        nodes, gl_w = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
        sin_t = np.sqrt(1.0 - nodes**2)
        dirs = np.empty((n_polar * n_azimuth, 3))
        wts = np.empty(n_polar * n_azimuth)
        dphi = 2.0 * np.pi / n_azimuth
        for i in range(n_polar):
            sl = slice(i * n_azimuth, (i + 1) * n_azimuth)
            dirs[sl, 0] = sin_t[i] * np.cos(phi)
            dirs[sl, 1] = sin_t[i] * np.sin(phi)
            dirs[sl, 2] = nodes[i]
            wts[sl] = gl_w[i] * dphi
        assert abs(wts.sum() - 4.0 * np.pi) < 1e-10
        half = window_in_w * linewidth
        freqs = np.linspace(-half, half, n_freq)
        fw = np.full(n_freq, freqs[1] - freqs[0])
        fw[0] *= 0.5
        fw[-1] *= 0.5
        return cls(
            directions=dirs,
            weights=wts,
            cos_theta=nodes,
            phi=phi,
            freqs=freqs,
            freq_weights=fw,
            k_mag=k_mag,
            linewidth=linewidth,
        )

    @classmethod
    def from_spec(cls, spec, k_mag: float, linewidth: float, coarse: bool = False):
        return cls.build(
            k_mag,
            linewidth,
            n_polar=spec.coarse_n_polar if coarse else spec.n_polar,
            n_azimuth=spec.coarse_n_azimuth if coarse else spec.n_azimuth,
            n_freq=spec.n_freq,
            window_in_w=spec.freq_window_w,
        )


# --------------------------------------------------------------------------
# spectral kernel
# --------------------------------------------------------------------------

def coupling_kernel(detuning, omega_c: float, gamma_e: float, t: float | None = None):
    """Photon coupling amplitude vs detuning from line center (flat bare g).

    Evaluates the control-field emission integral
    int_0^t (Omega_c*/(Gamma_e/2)) e^{i detuning t'} e^{-w t'} dt' and, for
    ``t=None``, its steady-state limit: a Lorentzian amplitude of half-width
    w = |Omega_c|^2/(Gamma_e/2).  The steady form carries a global phase i
    relative to the commonly quoted Omega_c*/(Gamma_e*detuning/2 + i|Omega_c|^2);
    the phase cancels in every probability and keeps the finite-t integral
    and its limit mutually consistent.
    """
    if gamma_e <= 0:
        raise EmissionError("gamma_e must be positive")
    detuning = np.asarray(detuning, dtype=float)
    if omega_c == 0:
        if t is None:
            warnings.warn("zero control field: photon kernel vanishes", stacklevel=2)
        return np.zeros_like(detuning, dtype=complex)
    w = emission_linewidth(omega_c, gamma_e)
    if t is None:
        numer = 1.0
    else:
        numer = 1.0 - np.exp(1j * detuning * t) * np.exp(-w * t)
    return (
        1j * (np.conj(omega_c) / (0.5 * gamma_e)) * numer / (detuning + 1j * w)
    )


# --------------------------------------------------------------------------
# photon state
# --------------------------------------------------------------------------

@dataclass
class PhotonState:
    grid: ModeGrid
    angular: np.ndarray     # complex amplitude per direction; sum w|A|^2 = total
    spectral: np.ndarray    # complex spectral profile, unit quadrature norm
    total_prob: float
    density_scale: float = 1.0   # |raw phase sum|^2 -> probability per sr

    @property
    def p_angular(self) -> np.ndarray:
        """Frequency-integrated probability density per steradian."""
        return np.abs(self.angular) ** 2

    def spectrum(self) -> np.ndarray:
        """Direction-integrated probability density per unit detuning."""
        return np.abs(self.spectral) ** 2 * self.total_prob

    def dense_amplitudes(self) -> np.ndarray:
        """Materialized (direction, frequency) amplitude table."""
        return np.outer(self.angular, self.spectral)

    def peak_angle_from(self, axis=(0.0, 0.0, 1.0)) -> float:
        """Polar angle (rad) between the strongest grid direction and ``axis``."""
        axis = np.asarray(axis, float)
        axis = axis / np.linalg.norm(axis)
        peak = self.grid.directions[int(np.argmax(self.p_angular))]
        return float(np.arccos(np.clip(peak @ axis, -1.0, 1.0)))


def photon_amplitudes(
    c_initial,
    positions,
    k0_vec,
    kc_vec,
    grid: ModeGrid,
    spectral=None,
    *,
    omega_c: float | None = None,
    gamma_e: float | None = None,
    t: float | None = None,
    total_prob: float | None = None,
) -> PhotonState:
    """Far-field photon state retrieved from stored amplitudes ``c_initial``.

    The angular part is the phase sum over atoms at the stored-grating
    mismatch (k0 - kc - k); the spectral part is ``spectral`` or the
    coupling kernel built from (omega_c, gamma_e, t).  The state is
    normalized so its total probability equals ``total_prob`` (defaults to
    the norm of the stored amplitudes: the excitation is eventually
    emitted somewhere and reabsorption is suppressed).
    """
    c_initial = np.asarray(c_initial, dtype=np.complex128)
    positions = np.asarray(positions, dtype=float)
    if grid.directions.shape[0] == 0 or grid.freqs.shape[0] == 0:
        raise EmissionError("empty mode grid")
    if c_initial.shape[0] != positions.shape[0]:
        raise EmissionError("one stored amplitude per atom is required")
    if spectral is None:
        if omega_c is None or gamma_e is None:
            raise EmissionError("provide either a spectral kernel or omega_c/gamma_e")
        spectral = coupling_kernel(grid.freqs, omega_c, gamma_e, t)
    spectral = np.asarray(spectral, dtype=np.complex128)
    if spectral.shape != grid.freqs.shape:
        raise EmissionError("spectral kernel does not match the frequency grid")

    q = (np.asarray(k0_vec, float) - np.asarray(kc_vec, float))[None, :] \
        - grid.k_mag * grid.directions
    angular = -kernels.phase_sum(c_initial, positions, np.ascontiguousarray(q))

    if total_prob is None:
        total_prob = float(np.sum(np.abs(c_initial) ** 2))
    ang_norm = float(np.sum(grid.weights * np.abs(angular) ** 2))
    spec_norm = float(np.sum(grid.freq_weights * np.abs(spectral) ** 2))
    if ang_norm == 0.0 or spec_norm == 0.0:
        raise EmissionError("photon amplitude vanishes on the whole grid")
    scale = total_prob / ang_norm
    angular = angular * np.sqrt(scale)
    spectral = spectral / np.sqrt(spec_norm)
    return PhotonState(
        grid=grid,
        angular=angular,
        spectral=spectral,
        total_prob=float(total_prob),
        density_scale=float(scale),
    )


def polar_cut(
    c_initial,
    positions,
    k0_vec,
    kc_vec,
    k_mag: float,
    plane: str = "xz",
    n_points: int = 1601,
    scale: float = 1.0,
):
    """Angular intensity cut through the emission axis.

    Returns (theta, p) with theta in [-pi, pi); ``plane`` selects the x-z
    or y-z plane.  ``scale`` converts |phase sum|^2 to the same density
    units as a sphere state (pass total_prob / angular_norm of the state).
    """
    theta = np.linspace(-np.pi, np.pi, n_points, endpoint=False)
    zeros = np.zeros_like(theta)
    if plane == "xz":
        dirs = np.column_stack([np.sin(theta), zeros, np.cos(theta)])
    elif plane == "yz":
        dirs = np.column_stack([zeros, np.sin(theta), np.cos(theta)])
    else:
        raise EmissionError(f"unknown cut plane {plane!r}")
    q = (np.asarray(k0_vec, float) - np.asarray(kc_vec, float))[None, :] - k_mag * dirs
    amps = kernels.phase_sum(
        np.asarray(c_initial, np.complex128),
        np.asarray(positions, float),
        np.ascontiguousarray(q),
    )
    return theta, scale * np.abs(amps) ** 2


def fwhm_from_cut(theta, p) -> float:
    """Full width at half maximum around the global peak of a polar cut."""
    p = np.asarray(p, float)
    i_pk = int(np.argmax(p))
    half = 0.5 * p[i_pk]

    def cross(idx_range):
        prev = i_pk
        for i in idx_range:
            if p[i] <= half:
                frac = (p[prev] - half) / (p[prev] - p[i])
                return theta[prev] + frac * (theta[i] - theta[prev])
            prev = i
        return None

    left = cross(range(i_pk - 1, -1, -1))
    right = cross(range(i_pk + 1, len(p)))
    if left is None or right is None:
        return float("nan")
    return float(right - left)


class ConeFraction(NamedTuple):
    conditional: float   # relative to the total emitted probability
    absolute: float      # scaled by the stored-excitation probability


def cone_fraction(state: PhotonState, axis=(0.0, 0.0, 1.0), delta_theta: float = None) -> ConeFraction:
    """Probability weight within polar angle ``delta_theta`` of ``axis``."""
    if delta_theta is None or not (0.0 < delta_theta <= np.pi):
        raise EmissionError("delta_theta must lie in (0, pi]")
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    mask = state.grid.directions @ axis >= np.cos(delta_theta)
    absolute = float(np.sum(state.grid.weights[mask] * state.p_angular[mask]))
    return ConeFraction(
        conditional=absolute / state.total_prob if state.total_prob else 0.0,
        absolute=absolute,
    )


class ModeOverlap(NamedTuple):
    raw: float
    normalized: float


def mode_overlap(
    state_a: PhotonState,
    state_b: PhotonState,
    window_theta: float | None = None,
    axis=(0.0, 0.0, 1.0),
) -> ModeOverlap:
    """|<psi_a|psi_b>| under the grid quadrature, raw and norm-independent.

    With ``window_theta`` set, the overlap is restricted to the forward cap
    of that polar half-angle about ``axis`` and normalized by the in-window
    norms: the reproducibility measure of the directed photon mode, which
    excludes the diffuse single-atom emission floor spread over the rest of
    the sphere.  ``raw`` then still carries the sqrt(P_a P_b) scale of the
    full states.
    """
    ga, gb = state_a.grid, state_b.grid
    if (
        ga.directions.shape != gb.directions.shape
        or not np.array_equal(ga.directions, gb.directions)
        or not np.array_equal(ga.freqs, gb.freqs)
        or ga.k_mag != gb.k_mag
    ):
        raise EmissionError("photon states live on different mode grids")
    if window_theta is None:
        mask = slice(None)
        norm_a, norm_b = state_a.total_prob, state_b.total_prob
    else:
        axis = np.asarray(axis, float)
        axis = axis / np.linalg.norm(axis)
        mask = ga.directions @ axis >= np.cos(window_theta)
        if not np.any(mask):
            raise EmissionError("overlap window contains no grid directions")
        norm_a = float(np.sum(ga.weights[mask] * np.abs(state_a.angular[mask]) ** 2))
        norm_b = float(np.sum(gb.weights[mask] * np.abs(state_b.angular[mask]) ** 2))
    ang = np.sum(
        ga.weights[mask] * np.conj(state_a.angular[mask]) * state_b.angular[mask]
    )
    spec = np.sum(ga.freq_weights * np.conj(state_a.spectral) * state_b.spectral)
    # spectral profiles are unit-normalized by construction; renormalize here
    # so reconstructed states with a shared raw kernel overlap consistently
    spec_norms = np.sqrt(
        np.sum(ga.freq_weights * np.abs(state_a.spectral) ** 2)
        * np.sum(ga.freq_weights * np.abs(state_b.spectral) ** 2)
    )
    spec_cos = spec / spec_norms if spec_norms else 0.0
    inner = float(np.abs(ang * spec_cos))
    denom = np.sqrt(norm_a * norm_b)
    normalized = inner / denom if denom else 0.0
    scale = np.sqrt(state_a.total_prob * state_b.total_prob)
    raw = inner if window_theta is None else normalized * scale
    return ModeOverlap(raw=float(raw), normalized=float(normalized))


# --------------------------------------------------------------------------
# single-step creation (storage state only virtually populated)
# --------------------------------------------------------------------------

@dataclass
class SingleStepResult:
    state: PhotonState
    times: np.ndarray
    c0_of_t: np.ndarray       # ground-manifold amplitude decay, real
    envelope: np.ndarray      # |Omega(t) c0(t) / Omega_c|^2 wavepacket shape
    extraction_prob: float    # 1 - |c0(T)|^2

    @property
    def emission_rate(self) -> np.ndarray:
        """Instantaneous extraction rate 2 D_bar(t)^2 / w."""
        return -np.gradient(self.c0_of_t**2, self.times)


def single_step_amplitudes(
    fld: CouplingField,
    schedule,
    omega_c: float,
    gamma_e: float,
    positions,
    k0_vec,
    kc_vec,
    grid: ModeGrid,
    *,
    t_final: float | None = None,
    n_time: int = 2001,
    gamma_s: float = 0.0,
) -> SingleStepResult:
    """Photon state produced with the control field on during excitation.

    The stored level is only virtually populated: source weights follow the
    bare couplings over the elimination detuning, the ground amplitude
    decays at the collective extraction rate, and the wavepacket spectrum
    is the windowed Fourier transform of the drive envelope times that
    decay.
    """
    w = emission_linewidth(omega_c, gamma_e)
    if w == 0.0:
        raise EmissionError("zero photon linewidth: control field is off")
    if abs(omega_c) >= 0.5 * gamma_e:
        warnings.warn(
            "single-step mode assumes |Omega_c| < Gamma_e/2", stacklevel=2
        )
    spread = float(np.max(np.abs(fld.delta_tilde_offset - fld.omega_max**2 / fld.delta_big))) if fld.d.size else 0.0
    if gamma_s > 0.3 * w or spread > 0.3 * w:
        warnings.warn(
            "single-step validity degraded: Rydberg decay or detuning spread "
            f"not small against the linewidth w = {w:.3f} rad/us",
            stacklevel=2,
        )
    if t_final is None:
        t_final = schedule.t_final_us
    times = np.linspace(0.0, t_final, n_time)
    omega_t = np.asarray(schedule.omega(times), dtype=float)
    d_bar_t = fld.d_bar * omega_t / fld.omega_max if fld.omega_max else 0.0 * omega_t
    rate = d_bar_t**2 / w
    dt = times[1] - times[0]
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * dt)])
    c0_t = np.exp(-integral)

    integrand = (omega_t / omega_c) * c0_t
    tw = np.full(n_time, dt)
    tw[0] *= 0.5
    tw[-1] *= 0.5
    spectral = np.exp(1j * np.outer(grid.freqs, times)) @ (integrand * tw)

    weights = -fld.d / fld.delta_big
    extraction = float(1.0 - c0_t[-1] ** 2)
    if extraction == 0.0 or not np.any(spectral):
        state = PhotonState(
            grid=grid,
            angular=np.zeros(grid.directions.shape[0], dtype=np.complex128),
            spectral=np.zeros_like(grid.freqs, dtype=np.complex128),
            total_prob=0.0,
            density_scale=0.0,
        )
    else:
        state = photon_amplitudes(
            weights.astype(np.complex128),
            positions,
            k0_vec,
            kc_vec,
            grid,
            spectral=spectral,
            total_prob=extraction,
        )
    return SingleStepResult(
        state=state,
        times=times,
        c0_of_t=c0_t,
        envelope=np.abs(integrand) ** 2,
        extraction_prob=extraction,
    )


# --------------------------------------------------------------------------
# analytic photon budget
# --------------------------------------------------------------------------

@dataclass
class PhotonBudget:
    eta: float
    n_atoms: int
    delta_theta_rad: float
    delta_omega_sr: float
    p_cone_geometric: float      # single-emitter solid-angle fraction
    p_cone_collective: float     # collective estimate, clamped to [0, 1]
    collective_estimate_raw: float  # eta N dOmega / 4 pi before clamping
    p_i_prime: float
    p_eg: float
    p_multi: float               # multi-photon emission estimate


def solid_angle(delta_theta: float) -> float:
    """Solid angle 2 pi (1 - cos delta_theta) of a cone, sr."""
    return 2.0 * np.pi * (1.0 - np.cos(delta_theta))


def photon_budget(
    eta: float,
    n_atoms: int,
    delta_theta: float,
    p_i_prime: float,
    p_eg: float,
) -> PhotonBudget:
    """Analytic emission-probability estimates for a cone of half-angle
    ``delta_theta`` about the phase-matched axis.

    Two distinct cone probabilities are produced: the collective estimate
    (eta N dOmega / 4 pi, reported raw and clamped) and the single-emitter
    geometric factor dOmega / 4 pi that enters the multi-photon estimate
    N * P_i' * P_eg * P_geometric.
    """
    for name, p in (("eta", eta), ("p_i_prime", p_i_prime), ("p_eg", p_eg)):
        if not 0.0 <= p <= 1.0:
            raise EmissionError(f"{name} must be a probability in [0, 1]")
    if n_atoms < 0:
        raise EmissionError("n_atoms must be >= 0")
    d_omega = solid_angle(delta_theta)
    geometric = d_omega / (4.0 * np.pi)
    raw = eta * n_atoms * geometric
    return PhotonBudget(
        eta=eta,
        n_atoms=n_atoms,
        delta_theta_rad=float(delta_theta),
        delta_omega_sr=float(d_omega),
        p_cone_geometric=float(geometric),
        p_cone_collective=float(min(1.0, raw)),
        collective_estimate_raw=float(raw),
        p_i_prime=p_i_prime,
        p_eg=p_eg,
        p_multi=float(n_atoms * p_i_prime * p_eg * geometric),
    )


def participation_fraction(amplitudes) -> float:
    """Effective fraction of atoms carrying the stored excitation.

    Normalized inverse participation ratio of the site amplitude moduli,
    (sum |a|)^2 / (N sum |a|^2): 1 for uniform weight, 1/N for a single
    excited site.  This is the coherent-enhancement fraction that enters
    the collective cone-emission estimate.
    """
    a = np.abs(np.asarray(amplitudes))
    n = a.size
    if n == 0 or not np.any(a):
        raise EmissionError("participation fraction of an empty profile")
    return float(np.sum(a) ** 2 / (n * np.sum(a**2)))
