import numpy as np
import pytest

from rydsource import (
    build_coupling_field,
    collective_coupling,
    dipole_coupling,
    dump_cloud,
    effective_coupling,
    effective_detuning,
    load_cloud,
    participation_fraction,
    sample_cloud,
    spin_wave_profile,
)
from rydsource.ensemble import (
    EnsembleError,
    collective_coupling_continuum,
)
from rydsource.units import mhz_to_rad_per_us

SOURCE = (7.0, 0.0, 0.0)
C3 = 11.7
OMEGA = mhz_to_rad_per_us(10.0)
DELTA = mhz_to_rad_per_us(94.0)
K0 = np.array([0.0, 0.0, 2.0 * np.pi / 0.297])


def fig2_cloud(i=0, n=1000):
    return sample_cloud(n, (1, 1, 6), (7041, i, 0), source_pos=SOURCE)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def test_same_seed_bit_identical():
    a = sample_cloud(500, (1, 1, 6), 123)
    b = sample_cloud(500, (1, 1, 6), 123)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, sample_cloud(500, (1, 1, 6), 124).positions)


def test_empty_cloud():
    cloud = sample_cloud(0, (1, 1, 6), 5)
    assert cloud.positions.shape == (0, 3)


def test_peak_density_matches_geometry():
    # Gaussian normalization oracle: N / ((2 pi)^{3/2} sx sy sz)
    density = 1000 / ((2 * np.pi) ** 1.5 * 1.0 * 1.0 * 6.0)
    assert density == pytest.approx(10.58, abs=0.01)  # the quoted ~10 um^-3 peak
    # counting-box oracle: expected atoms in a central box from the erf mass
    from scipy.special import erf

    half = np.array([1.0, 1.0, 1.5])
    sigma = np.array([1.0, 1.0, 6.0])
    expected_count = 1000 * np.prod(erf(half / (sigma * np.sqrt(2.0))))
    counts = []
    for i in range(10):
        cloud = fig2_cloud(i)
        box = np.all(np.abs(cloud.positions) < half, axis=1)
        counts.append(box.sum())
    assert np.mean(counts) == pytest.approx(expected_count, rel=0.1)


def test_sample_mean_gate():
    assert fig2_cloud().mean_ok


def test_resample_guard_moves_atoms():
    cloud = sample_cloud(
        2000, (1, 1, 1), 7, source_pos=(4.0, 0.0, 0.0), min_source_distance=2.0
    )
    dist = np.linalg.norm(cloud.positions - np.array([4.0, 0.0, 0.0]), axis=1)
    assert dist.min() >= 2.0
    assert cloud.n_resampled > 0


def test_resample_guard_gives_up_when_impossible():
    with pytest.raises(EnsembleError):
        sample_cloud(50, (0.1, 0.1, 0.1), 7, source_pos=(0, 0, 0), min_source_distance=5.0)


def test_invalid_sampling_args():
    with pytest.raises(EnsembleError):
        sample_cloud(-1, (1, 1, 1), 0)
    with pytest.raises(EnsembleError):
        sample_cloud(5, (0, 1, 1), 0)


# --------------------------------------------------------------------------
# bare exchange coupling
# --------------------------------------------------------------------------

def test_coupling_at_center():
    d = dipole_coupling((0, 0, 0), SOURCE, C3)
    assert d == pytest.approx(mhz_to_rad_per_us(5.4), rel=0.02)  # quoted 2pi x 5.4 MHz
    assert d == pytest.approx(1e3 * C3 / 7.0**3, rel=1e-12)


def test_coupling_along_dipole_axis_is_minus_two():
    d_x = dipole_coupling((7, 0, 0), (0, 0, 0), C3)
    d_y = dipole_coupling((0, 7, 0), (0, 0, 0), C3)
    assert d_y == pytest.approx(-2.0 * d_x, rel=1e-12)


def test_magic_angle_zero():
    u = np.array([np.sqrt(2.0 / 3.0), np.sqrt(1.0 / 3.0), 0.0])  # cos = 1/sqrt(3)
    d = dipole_coupling(7.0 * u, (0, 0, 0), C3)
    assert abs(d) < 1e-10 * abs(dipole_coupling((7, 0, 0), (0, 0, 0), C3))


def test_zero_distance_is_error():
    with pytest.raises(EnsembleError):
        dipole_coupling((1.0, 2.0, 3.0), (1.0, 2.0, 3.0), C3)


def test_close_approach_warns():
    with pytest.warns(UserWarning, match="dipole"):
        dipole_coupling((0.3, 0.0, 0.0), (0.0, 0.0, 0.0), C3)


def test_parity_and_rotation_about_dipole_axis(rng):
    for _ in range(20):
        r = rng.normal(size=3) * 5.0
        if np.linalg.norm(r) < 1.0:
            continue
        d = dipole_coupling(r, (0, 0, 0), C3)
        assert dipole_coupling(-r, (0, 0, 0), C3) == pytest.approx(d, rel=1e-12)
        ang = rng.uniform(0, 2 * np.pi)
        c, s = np.cos(ang), np.sin(ang)
        rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])  # rotation about y
        assert dipole_coupling(rot @ r, (0, 0, 0), C3) == pytest.approx(d, rel=1e-12)


def test_cubic_distance_scaling(rng):
    r = np.array([3.0, 1.0, 2.0])
    d1 = dipole_coupling(r, (0, 0, 0), C3)
    d2 = dipole_coupling(2.0 * r, (0, 0, 0), C3)
    assert d2 == pytest.approx(d1 / 8.0, rel=1e-14)


def test_strongest_coupling_at_nearest_atom():
    for i in range(5):
        cloud = fig2_cloud(i)
        d = dipole_coupling(cloud.positions, SOURCE, C3)
        dist = np.linalg.norm(cloud.positions - np.array(SOURCE), axis=1)
        assert int(np.argmax(np.abs(d))) == int(np.argmin(dist))


# --------------------------------------------------------------------------
# effective couplings
# --------------------------------------------------------------------------

def test_effective_coupling_values():
    d = mhz_to_rad_per_us(5.4)
    dt = effective_coupling(d, OMEGA, DELTA)
    # oracle: -5.4 * 10 / 94 MHz
    assert dt == pytest.approx(-mhz_to_rad_per_us(5.4 * 10.0 / 94.0), rel=1e-12)
    assert abs(dt) == pytest.approx(mhz_to_rad_per_us(0.6), rel=0.1)  # quoted value
    assert effective_coupling(d, 0.0, DELTA) == 0.0
    assert effective_coupling(d, OMEGA, 2 * DELTA) == pytest.approx(dt / 2, rel=1e-12)
    with pytest.raises(EnsembleError):
        effective_coupling(d, OMEGA, 0.0)


def test_effective_detuning_values():
    delta = 1.7
    assert effective_detuning(delta, OMEGA, OMEGA, DELTA) == pytest.approx(delta)
    # oracle: (10^2 - 5.4^2)/94 MHz = 0.753617... MHz
    out = effective_detuning(0.0, OMEGA, mhz_to_rad_per_us(5.4), DELTA)
    assert out == pytest.approx(mhz_to_rad_per_us((100 - 5.4**2) / 94.0), rel=1e-12)
    assert effective_detuning(delta, OMEGA, 0.0, DELTA) == pytest.approx(
        delta + OMEGA**2 / DELTA, rel=1e-12
    )


def test_collective_coupling_algebra(rng):
    dt = np.full(16, 2.5)
    assert collective_coupling(dt) == pytest.approx(4.0 * 2.5, rel=1e-14)
    assert collective_coupling([3.0]) == 3.0
    with pytest.warns(UserWarning):
        assert collective_coupling([]) == 0.0
    vals = rng.normal(size=50)
    perm = rng.permutation(50)
    assert collective_coupling(vals) == pytest.approx(
        collective_coupling(vals[perm]), rel=1e-14
    )


def test_field_identity_d_bar():
    cloud = fig2_cloud()
    fld = build_coupling_field(cloud, SOURCE, C3, OMEGA, DELTA)
    assert fld.d_bar**2 == pytest.approx(np.sum(fld.d_tilde**2), rel=1e-12)
    assert np.all(np.sign(fld.d_tilde) == -np.sign(fld.d))


def test_continuum_estimate_matches_sampling():
    est = collective_coupling_continuum(1000, (1, 1, 6), SOURCE, C3, OMEGA, DELTA)
    sampled = np.median(
        [
            build_coupling_field(fig2_cloud(i), SOURCE, C3, OMEGA, DELTA).d_bar
            for i in range(20)
        ]
    )
    assert est == pytest.approx(sampled, rel=0.1)


# --------------------------------------------------------------------------
# spin-wave profile
# --------------------------------------------------------------------------

def test_profile_is_normalized():
    cloud = fig2_cloud()
    fld = build_coupling_field(cloud, SOURCE, C3, OMEGA, DELTA)
    prof = spin_wave_profile(cloud, fld, K0)
    assert np.sum(np.abs(prof.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_profile_rejects_dead_field():
    cloud = fig2_cloud()
    fld = build_coupling_field(cloud, SOURCE, C3, 0.0, DELTA)
    with pytest.raises(EnsembleError):
        spin_wave_profile(cloud, fld, K0)


def test_z_density_symmetric_and_x_density_skewed():
    z_dens = []
    moments_hist = []
    moments_direct = []
    for i in range(40):
        cloud = fig2_cloud(i)
        fld = build_coupling_field(cloud, SOURCE, C3, OMEGA, DELTA)
        prof = spin_wave_profile(cloud, fld, K0)
        z_dens.append(prof.hist_density["z"])
        edges = prof.hist_edges["x"]
        centers = 0.5 * (edges[:-1] + edges[1:])
        width = edges[1] - edges[0]
        moments_hist.append(np.sum(centers * prof.hist_density["x"] * width))
        w = np.abs(prof.amplitudes) ** 2
        inside = np.abs(cloud.positions[:, 0]) <= edges[-1]
        moments_direct.append(
            np.sum(w[inside] * cloud.positions[inside, 0]) / np.sum(w[inside])
        )
    mean_z = np.mean(z_dens, axis=0)
    asym = np.abs(mean_z - mean_z[::-1]).max() / mean_z.max()
    assert asym < 0.12  # statistical symmetry about z = 0
    # excitation pulled toward the source side (x > 0)
    assert np.mean(moments_hist) > 0.1
    # histogram moment against the direct weighted-sum oracle
    assert np.mean(moments_hist) == pytest.approx(
        np.mean(moments_direct), abs=0.05
    )


def test_participation_trivial_cases():
    assert participation_fraction(np.full(50, 0.3 + 0.1j)) == pytest.approx(1.0)
    single = np.zeros(50, complex)
    single[7] = 1.0
    assert participation_fraction(single) == pytest.approx(1.0 / 50.0)


def test_cloud_csv_round_trip(tmp_path):
    cloud = fig2_cloud(3, n=64)
    path = tmp_path / "cloud.csv"
    dump_cloud(cloud, path)
    loaded = load_cloud(path, sigma=cloud.sigma)
    assert np.array_equal(loaded.positions, cloud.positions)
