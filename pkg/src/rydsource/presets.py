"""Atomic species presets.

Each preset fixes the exchange coefficient C3, the source/medium frequency
mismatch, the three optical wavelengths of the excitation scheme and the
decay rate of the low excited state.  C3 follows the angular-frequency
convention: the bare exchange coupling in rad/us at distance R um is
``1e3 * c3_ghz_um3 / R**3`` times the anisotropy factor, which reproduces
a coupling of 2*pi x 5.43 MHz at R = 7 um for C3 = 11.7 GHz um^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .units import TWO_PI, mhz_to_rad_per_us, wavelength_nm_to_k_um


class PresetError(ValueError):
    """Raised for unknown preset names or inconsistent preset constants."""


@dataclass(frozen=True)
class SpeciesPreset:
    name: str
    c3_ghz_um3: float          # exchange coefficient, GHz um^3 (angular convention)
    delta_sa: float            # source/medium mismatch omega_ud - omega_si, rad/us
    lambda_excite_nm: float    # ground -> intermediate Rydberg laser
    lambda_control_nm: float   # Rydberg -> low-excited control laser
    lambda_photon_nm: float    # emission wavelength of the low excited state
    gamma_e: float             # low excited state decay, rad/us
    levels: dict = field(default_factory=dict, compare=False)

    def validate(self) -> None:
        if self.c3_ghz_um3 <= 0:
            raise PresetError(f"{self.name}: C3 must be positive")
        if self.delta_sa >= 0:
            raise PresetError(f"{self.name}: delta_sa must be negative")
        inv = 1.0 / self.lambda_excite_nm - 1.0 / self.lambda_control_nm
        if inv == 0.0:
            raise PresetError(
                f"{self.name}: no phase-matched optical mode "
                "(excitation and control wavelengths are equal)"
            )
        lam_eff = 1.0 / abs(inv)
        if abs(lam_eff - self.lambda_photon_nm) > 0.01 * self.lambda_photon_nm:
            raise PresetError(
                f"{self.name}: emission wavelength {self.lambda_photon_nm} nm is not "
                f"phase-matching consistent (|1/l0 - 1/lc|^-1 = {lam_eff:.2f} nm)"
            )


# Standard Rb medium wavelengths: 297 nm two-photon-equivalent excitation,
# 480 nm control, 780.24 nm D2 emission; gamma_e is the Rb D2 linewidth.
_RB_WAVELENGTHS = dict(
    lambda_excite_nm=297.0,
    lambda_control_nm=480.0,
    lambda_photon_nm=780.24,
)
_GAMMA_E_DEFAULT = mhz_to_rad_per_us(6.07)

PRESETS: dict[str, SpeciesPreset] = {
    "CsRb_70P": SpeciesPreset(
        name="CsRb_70P",
        c3_ghz_um3=11.7,
        delta_sa=-mhz_to_rad_per_us(94.0),
        gamma_e=_GAMMA_E_DEFAULT,
        levels={
            "source": "Cs",
            "u": "70P_3/2 mj=1/2",
            "d": "70S_1/2 mj=1/2",
            "medium": "Rb",
            "i": "58P_3/2 mj=3/2",
            "s": "57D_5/2 mj=3/2",
        },
        **_RB_WAVELENGTHS,
    ),
    "RbRb_A": SpeciesPreset(
        name="RbRb_A",
        c3_ghz_um3=16.1,
        delta_sa=-mhz_to_rad_per_us(92.0),
        gamma_e=_GAMMA_E_DEFAULT,
        levels={
            "source": "Rb",
            "u": "70P_3/2 mj=3/2",
            "d": "68D_5/2 mj=3/2",
            "medium": "Rb",
            "i": "64P_3/2 mj=1/2",
            "s": "65S_1/2 mj=1/2",
        },
        **_RB_WAVELENGTHS,
    ),
    "RbRb_B": SpeciesPreset(
        name="RbRb_B",
        c3_ghz_um3=20.3,
        delta_sa=-mhz_to_rad_per_us(86.0),
        gamma_e=_GAMMA_E_DEFAULT,
        levels={
            "source": "Rb",
            "u": "71P_1/2 mj=1/2",
            "d": "69D_3/2 mj=1/2",
            "medium": "Rb",
            "i": "65P_3/2 mj=1/2",
            "s": "66S_1/2 mj=1/2",
        },
        **_RB_WAVELENGTHS,
    ),
}


def preset(name: str) -> SpeciesPreset:
    """Look up a species preset by name."""
    try:
        p = PRESETS[name]
    except KeyError:
        raise PresetError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    p.validate()
    return p


def phase_match_wavenumber(p: SpeciesPreset) -> float:
    """Wavenumber (1/um) of the phase-matched emission mode.

    Returns 2*pi/lambda_photon after checking that the collinear wave-vector
    difference |k0 - kc| of the two driving lasers matches it within 1%.
    """
    p.validate()
    k = wavelength_nm_to_k_um(p.lambda_photon_nm)
    k_diff = abs(
        wavelength_nm_to_k_um(p.lambda_excite_nm)
        - wavelength_nm_to_k_um(p.lambda_control_nm)
    )
    if abs(k_diff - k) > 0.01 * k:
        raise PresetError(
            f"{p.name}: |k0 - kc| = {k_diff:.4f} /um does not match the emission "
            f"wavenumber {k:.4f} /um within 1%"
        )
    return k


def emission_linewidth(omega_c: float, gamma_e: float) -> float:
    """Linewidth w = |Omega_c|^2 / (Gamma_e / 2) of the converted photon, rad/us."""
    if gamma_e <= 0:
        raise ValueError("gamma_e must be positive")
    return abs(omega_c) ** 2 / (gamma_e / 2.0)
