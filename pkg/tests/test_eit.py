import numpy as np
import pytest

from rydsource import (
    EitMedium,
    PolaritonField,
    group_velocity,
    mixing_angle,
    polariton_propagate,
    susceptibility,
    transparency_hwhm,
    transparency_profile,
)
from rydsource.eit import EitError, absorption_coefficient, susceptibility_value
from rydsource.units import C_UM_PER_US, mhz_to_rad_per_us

G = mhz_to_rad_per_us(0.4)       # per sqrt(atoms/um)
GAMMA_E = mhz_to_rad_per_us(3.0)
OMEGA_P = 2.4e9                  # rad/us optical carrier scale


def uniform_medium(omega_c, gamma_s=0.0, rho=150.0, n_z=51):
    z = np.linspace(-20.0, 20.0, n_z)
    return EitMedium(
        z_grid=z,
        rho_of_z=np.full(n_z, rho),
        g=G,
        gamma_e=GAMMA_E,
        gamma_s=gamma_s,
        omega_c=omega_c,
        omega_p=OMEGA_P,
    )


# --------------------------------------------------------------------------
# susceptibility
# --------------------------------------------------------------------------

def test_exact_transparency_on_resonance():
    med = uniform_medium(omega_c=mhz_to_rad_per_us(1.0), gamma_s=0.0)
    chi = susceptibility(med, 0.0, 0.0)
    assert chi == 0.0


def test_bare_line_without_control():
    med = uniform_medium(omega_c=0.0, gamma_s=0.0)
    delta = 1.3
    chi = susceptibility(med, 0.0, delta)
    # oracle: direct complex arithmetic of the reduced two-level formula
    expected = 1j * (2.0 / OMEGA_P) * G**2 * 150.0 / (GAMMA_E - 1j * delta)
    assert chi == pytest.approx(expected, rel=1e-14)


def test_general_value_against_scalar_arithmetic():
    omega_c = mhz_to_rad_per_us(1.0)
    gamma_s = 0.01
    rho = 10.0
    delta = 0.5 * omega_c**2 / (GAMMA_E / 2)
    got = susceptibility_value(G, rho, GAMMA_E, gamma_s, omega_c, OMEGA_P, delta)
    denom = (GAMMA_E - 1j * delta) + abs(omega_c) ** 2 / (gamma_s - 1j * delta)
    expected = 1j * (2.0 / OMEGA_P) * G**2 * rho / denom
    assert got == pytest.approx(expected, rel=1e-14)


def test_window_is_symmetric_without_ground_relaxation():
    med = uniform_medium(omega_c=mhz_to_rad_per_us(1.0), gamma_s=0.0)
    scan = np.linspace(0.1, 5.0, 40)
    im_pos = np.imag(susceptibility(med, 0.0, scan))
    im_neg = np.imag(susceptibility(med, 0.0, -scan))
    assert np.max(np.abs(im_pos - im_neg)) < 1e-15


def test_singular_configuration_raises():
    with pytest.raises(EitError):
        susceptibility_value(G, 5.0, 0.0, 0.0, 0.0, OMEGA_P, 0.0)


def test_passivity(rng):
    for _ in range(10):
        med = uniform_medium(
            omega_c=float(rng.uniform(0, 10)),
            gamma_s=float(rng.uniform(0, 0.1)),
            rho=float(rng.uniform(1, 300)),
        )
        scan = np.linspace(-40, 40, 401)
        assert np.all(np.imag(susceptibility(med, 0.0, scan)) >= -1e-18)


def test_transparency_hwhm_matches_expansion():
    # oracle: leading-order expansion gives half-absorption at |Omega_c|^2/gamma_e
    omega_c = mhz_to_rad_per_us(0.3)
    med = uniform_medium(omega_c=omega_c, gamma_s=0.0)
    expected = abs(omega_c) ** 2 / GAMMA_E
    assert transparency_hwhm(med) == pytest.approx(expected, rel=0.05)


def test_transparency_profile_shape():
    med = uniform_medium(omega_c=mhz_to_rad_per_us(0.5))
    scan = np.linspace(-2.0, 2.0, 101)
    absorb, hwhm = transparency_profile(med, scan)
    assert absorb.shape == (med.z_grid.size, scan.size)
    assert absorb[:, 50] == pytest.approx(0.0, abs=1e-18)
    assert hwhm > 0


def test_absorption_units_scale_with_carrier():
    med = uniform_medium(omega_c=0.0)
    a = absorption_coefficient(med, 0.0, 0.3)
    chi = susceptibility(med, 0.0, 0.3)
    assert a == pytest.approx(med.omega_p / (2 * C_UM_PER_US) * chi.imag, rel=1e-14)


# --------------------------------------------------------------------------
# dark-state polariton
# --------------------------------------------------------------------------

def test_mixing_angle_limits():
    assert mixing_angle(G, 100.0, 0.0) == pytest.approx(np.pi / 2)
    g_rho = G * np.sqrt(100.0)
    assert mixing_angle(G, 100.0, g_rho) == pytest.approx(np.pi / 4, rel=1e-12)
    assert group_velocity(np.pi / 4) == pytest.approx(C_UM_PER_US / 2, rel=1e-12)
    assert mixing_angle(G, 100.0, 1e6 * g_rho) < 1e-5
    with pytest.raises(EitError):
        mixing_angle(G, 100.0, -1.0)


def gaussian_field(center=-60.0, width=10.0):
    z = np.linspace(-200.0, 200.0, 4001)
    return PolaritonField(z_grid=z, psi=np.exp(-0.5 * ((z - center) / width) ** 2))


def test_stationary_polariton_is_identity():
    fld = gaussian_field()
    out = polariton_propagate(fld, lambda t: np.pi / 2, t_final=2.0, dt=1e-3)
    assert np.allclose(out.psi, fld.psi, rtol=0, atol=1e-13)
    assert out.t == 2.0


def test_constant_angle_displacement():
    fld = gaussian_field()
    theta = np.arccos(np.sqrt(20.0 / C_UM_PER_US))  # v = 20 um/us
    out = polariton_propagate(fld, lambda t: theta, t_final=3.0, dt=1e-4)
    z_peak_in = fld.z_grid[int(np.argmax(np.abs(fld.psi)))]
    z_peak_out = out.z_grid[int(np.argmax(np.abs(out.psi)))]
    assert z_peak_out - z_peak_in == pytest.approx(60.0, abs=0.2)


def test_storage_to_retrieval_preserves_shape():
    fld = gaussian_field()
    theta_open = np.pi / 2 - 2.4e-4  # slow-light opening of the control field

    def theta_of_t(t):
        if t < 0.5:
            return np.pi / 2
        return np.pi / 2 + (theta_open - np.pi / 2) * min(1.0, (t - 0.5) / 0.5)

    t_final = 3.0
    out = polariton_propagate(fld, theta_of_t, t_final=t_final, dt=1e-4)
    # oracle: exact characteristic displacement via the angle ramp integral
    from scipy.integrate import quad

    disp, _ = quad(lambda t: group_velocity(theta_of_t(t)), 0, t_final, limit=400)
    shifted = np.exp(-0.5 * ((fld.z_grid - (-60.0) - disp) / 10.0) ** 2)
    l2 = np.sqrt(
        np.trapezoid(np.abs(out.psi - shifted) ** 2, fld.z_grid)
        / np.trapezoid(np.abs(shifted) ** 2, fld.z_grid)
    )
    assert l2 < 1e-6
    assert out.norm() == pytest.approx(fld.norm(), rel=1e-6)


def test_displacement_beyond_grid_errors():
    fld = gaussian_field(center=150.0)
    theta = np.arccos(np.sqrt(100.0 / C_UM_PER_US))
    with pytest.raises(EitError, match="extend the z grid"):
        polariton_propagate(fld, lambda t: theta, t_final=2.0)


def test_advection_step_bound():
    fld = gaussian_field()
    theta = np.arccos(np.sqrt(1000.0 / C_UM_PER_US))  # v = 1000 um/us
    with pytest.raises(EitError, match="step too large"):
        polariton_propagate(fld, lambda t: theta, t_final=0.01, dt=0.01)


def test_group_delay_consistency():
    omega_c = mhz_to_rad_per_us(1.0)
    rho = 150.0
    med = uniform_medium(omega_c=omega_c, gamma_s=0.0, rho=rho)
    length = 40.0
    h = 1e-4
    re_plus = np.real(susceptibility(med, 0.0, h))
    re_minus = np.real(susceptibility(med, 0.0, -h))
    tau_numeric = (med.omega_p / (2 * C_UM_PER_US)) * length * (
        re_plus - re_minus
    ) / (2 * h)
    theta = mixing_angle(med.g, rho, omega_c)
    v = group_velocity(theta)
    tau_expected = length / v - length / C_UM_PER_US
    assert tau_numeric == pytest.approx(tau_expected, rel=0.05)
