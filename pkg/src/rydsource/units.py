"""Unit conventions used throughout the package.

Internal canonical units are micrometers (um) for length and microseconds
(us) for time.  Every oscillation-like quantity (Rabi frequencies,
detunings, couplings, natural linewidths) is an *angular* rate in rad/us,
so that 1 MHz of ordinary frequency equals 2*pi rad/us.  Plain decay and
dephasing rates (population 1/e rates) are in 1/us and carry no 2*pi.
The two conventions must never be mixed; config keys advertise the unit
in their suffix (``*_mhz`` vs ``*_per_us``).
"""

from __future__ import annotations

import math
from typing import NewType

TWO_PI = 2.0 * math.pi

# Speed of light in um/us (= m/s numerically).
C_UM_PER_US = 299_792_458.0

# rad/us angular rate (Rabi frequencies, detunings, couplings, linewidths)
AngularRate = NewType("AngularRate", float)
# 1/us plain rate (population decay, dephasing)
PlainRate = NewType("PlainRate", float)


def mhz_to_rad_per_us(value_mhz: float) -> float:
    """Convert an ordinary frequency in MHz to an angular rate in rad/us."""
    return TWO_PI * value_mhz


def rad_per_us_to_mhz(value: float) -> float:
    """Convert an angular rate in rad/us back to an ordinary frequency in MHz."""
    return value / TWO_PI


def wavelength_nm_to_k_um(wavelength_nm: float) -> float:
    """Wavenumber 2*pi/lambda in 1/um for a wavelength given in nm."""
    if wavelength_nm <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength_nm} nm")
    return TWO_PI / (wavelength_nm * 1e-3)
