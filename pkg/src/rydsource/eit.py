"""1D transparency model for the retrieved photon: susceptibility and
dark-state polariton propagation.

This is a standalone check that the control field renders the medium
transparent for the emitted photon; it is not coupled into the 3D
emission calculation.  Lengths um, times us, angular rates rad/us.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .units import C_UM_PER_US, TWO_PI, mhz_to_rad_per_us, wavelength_nm_to_k_um


class EitError(ValueError):
    pass


@dataclass
class EitMedium:
    z_grid: np.ndarray        # strictly increasing positions, um
    rho_of_z: np.ndarray      # linear atom density, 1/um
    g: float                  # atom-field coupling, rad/us per sqrt(1/um)
    gamma_e: float            # optical coherence relaxation, rad/us
    gamma_s: float            # Rydberg coherence relaxation, 1/us
    omega_c: float            # stationary control Rabi frequency, rad/us
    omega_p: float            # probe carrier, rad/us

    def __post_init__(self):
        self.z_grid = np.asarray(self.z_grid, dtype=float)
        self.rho_of_z = np.asarray(self.rho_of_z, dtype=float)
        if np.any(np.diff(self.z_grid) <= 0):
            raise EitError("z grid must be strictly increasing")
        if np.any(self.rho_of_z < 0):
            raise EitError("atom density must be non-negative")

    def rho_at(self, z):
        return np.interp(z, self.z_grid, self.rho_of_z, left=0.0, right=0.0)

    @classmethod
    def gaussian(
        cls,
        sigma_z: float = 6.0,
        g_sqrt_rho_max: float = mhz_to_rad_per_us(5.0),
        rho_peak: float = 166.0,
        gamma_e: float = mhz_to_rad_per_us(3.035),
        gamma_s: float = 0.015,
        omega_c: float = mhz_to_rad_per_us(1.0),
        lambda_photon_nm: float = 780.24,
        n_z: int = 401,
        z_span_sigma: float = 5.0,
    ) -> "EitMedium":
        """Gaussian column with the coupling chosen to hit a target g sqrt(rho)."""
        z = np.linspace(-z_span_sigma * sigma_z, z_span_sigma * sigma_z, n_z)
        rho = rho_peak * np.exp(-0.5 * (z / sigma_z) ** 2)
        g = g_sqrt_rho_max / np.sqrt(rho_peak)
        omega_p = C_UM_PER_US * wavelength_nm_to_k_um(lambda_photon_nm)
        return cls(
            z_grid=z,
            rho_of_z=rho,
            g=g,
            gamma_e=gamma_e,
            gamma_s=gamma_s,
            omega_c=omega_c,
            omega_p=omega_p,
        )


def susceptibility_value(
    g: float,
    rho,
    gamma_e: float,
    gamma_s: float,
    omega_c: float,
    omega_p: float,
    delta_p,
):
    """Complex susceptibility of the driven ladder medium.

    chi = (2/omega_p) * i g^2 rho / (gamma_e - i delta_p
          + |Omega_c|^2 / (gamma_s - i delta_p)).
    At exact two-photon resonance with no Rydberg relaxation the coupled
    term diverges and chi is exactly 0 (perfect transparency).
    """
    delta_p = np.asarray(delta_p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    scalar = delta_p.ndim == 0 and rho.ndim == 0
    delta_p, rho = np.atleast_1d(delta_p), np.atleast_1d(rho)
    inner = gamma_s - 1j * delta_p
    out = np.empty(np.broadcast(delta_p, rho).shape, dtype=complex)
    singular_inner = inner == 0
    if omega_c != 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = gamma_e - 1j * delta_p + abs(omega_c) ** 2 / inner
            chi = 1j * (2.0 / omega_p) * g**2 * rho / denom
        # the diverging two-photon term pins chi to zero there
        chi = np.where(singular_inner, 0.0, chi)
        out[...] = chi
    else:
        denom = gamma_e - 1j * delta_p
        if np.any(denom == 0):
            raise EitError(
                "singular susceptibility: gamma_e = delta_p = 0 with no control field"
            )
        out[...] = 1j * (2.0 / omega_p) * g**2 * rho / denom
    return out[0] if scalar else out.reshape(np.broadcast(delta_p, rho).shape)


def susceptibility(medium: EitMedium, z, delta_p):
    """chi at position(s) z and probe detuning(s) delta_p."""
    return susceptibility_value(
        medium.g,
        medium.rho_at(z),
        medium.gamma_e,
        medium.gamma_s,
        medium.omega_c,
        medium.omega_p,
        delta_p,
    )


def absorption_coefficient(medium: EitMedium, z, delta_p):
    """(omega_p / 2c) Im chi, the field absorption rate per um."""
    chi = susceptibility(medium, z, delta_p)
    return (medium.omega_p / (2.0 * C_UM_PER_US)) * np.imag(chi)


def transparency_profile(medium: EitMedium, delta_p_grid):
    """Absorption over (z, delta_p) plus the numeric transparency half-width.

    The half-width is the detuning at which absorption at the density peak
    climbs to half of the bare (control off) resonant absorption.
    """
    delta_p_grid = np.asarray(delta_p_grid, dtype=float)
    absorb = np.empty((medium.z_grid.size, delta_p_grid.size))
    for i, z in enumerate(medium.z_grid):
        absorb[i] = absorption_coefficient(medium, z, delta_p_grid)
    return absorb, transparency_hwhm(medium, delta_p_grid)


def transparency_hwhm(medium: EitMedium, delta_p_grid=None) -> float:
    """Numerically extracted half-width of the transparency window."""
    z_peak = medium.z_grid[int(np.argmax(medium.rho_of_z))]
    rho_pk = float(medium.rho_at(z_peak))
    bare = np.imag(
        susceptibility_value(
            medium.g, rho_pk, medium.gamma_e, medium.gamma_s, 0.0,
            medium.omega_p, 0.0,
        )
    )
    half = 0.5 * bare
    w_guess = abs(medium.omega_c) ** 2 / medium.gamma_e
    if delta_p_grid is None:
        delta_p_grid = np.linspace(0.0, 10.0 * max(w_guess, 1e-12), 4001)
    delta_p_grid = np.asarray(delta_p_grid, dtype=float)
    pos = delta_p_grid[delta_p_grid >= 0.0]
    im = np.imag(susceptibility(medium, z_peak, pos))
    above = np.nonzero(im >= half)[0]
    if above.size == 0:
        raise EitError("transparency window wider than the scanned detuning range")
    i = above[0]
    if i == 0:
        return float(pos[0])
    frac = (half - im[i - 1]) / (im[i] - im[i - 1])
    return float(pos[i - 1] + frac * (pos[i] - pos[i - 1]))


def mixing_angle(g: float, rho: float, omega_c: float) -> float:
    """Dark-state polariton mixing angle, tan(theta) = g sqrt(rho) / Omega_c."""
    if omega_c < 0:
        raise EitError("omega_c must be non-negative")
    return float(np.arctan2(g * np.sqrt(rho), omega_c))


def group_velocity(theta) -> float:
    """Polariton group velocity c cos^2(theta), um/us."""
    return C_UM_PER_US * np.cos(theta) ** 2


@dataclass
class PolaritonField:
    z_grid: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    def norm(self) -> float:
        return float(np.trapezoid(np.abs(self.psi) ** 2, self.z_grid))


def polariton_propagate(
    fld: PolaritonField,
    theta_of_t,
    t_final: float,
    dz: float | None = None,
    dt: float | None = None,
) -> PolaritonField:
    """Advect the polariton envelope by the exact characteristic solution.

    The displacement is the time integral of c cos^2(theta(t)); the output
    envelope is the input shifted by it (cubic interpolation, zero outside
    the original support).  Errors out if the shifted support leaves the
    grid.  ``dz``/``dt`` only undergo the advection stability sanity check;
    the shift itself is exact.
    """
    if t_final < 0:
        raise EitError("t_final must be non-negative")
    z = fld.z_grid
    if dz is None:
        dz = float(np.min(np.diff(z)))
    displacement, _ = quad(
        lambda t: group_velocity(theta_of_t(t)), 0.0, t_final, limit=400
    )
    if dt is not None:
        v_max = max(
            group_velocity(theta_of_t(t))
            for t in np.linspace(0.0, t_final, 101)
        )
        if v_max * dt > dz * (1.0 + 1e-12):
            raise EitError(
                f"advection step too large: v_max dt = {v_max * dt:.3g} um > dz"
            )
    mass = np.abs(fld.psi) ** 2
    if mass.any():
        support = z[mass > 1e-30 * mass.max()]
        if support[0] + displacement < z[0] or support[-1] + displacement > z[-1]:
            raise EitError(
                f"displacement {displacement:.3g} um pushes the envelope off the "
                "grid; extend the z grid"
            )
    spline = CubicSpline(z, fld.psi, extrapolate=False)
    shifted = spline(z - displacement)
    shifted = np.where(np.isnan(shifted), 0.0, shifted)
    return PolaritonField(z_grid=z, psi=shifted, t=fld.t + t_final)
