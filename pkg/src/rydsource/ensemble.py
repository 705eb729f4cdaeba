"""Disordered atomic cloud and the exchange-coupling field it sees.

A cloud is a Gaussian-distributed set of atom positions (um).  Each atom
couples to the source atom through the anisotropic 1/R^3 exchange
interaction; the drive converts that into a second-order coupling and a
position-dependent light shift.  The root-sum-square of the second-order
couplings is the collective rate that drives the ensemble transfer, and
the normalized coupling amplitudes define the stored spin-wave profile.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .units import TWO_PI

# Exchange strength at 1 um for C3 = 1 GHz um^3, in rad/us.
_C3_SCALE = 1.0e3

# Below this source-atom distance the point-dipole exchange model is stressed.
MIN_SOURCE_DISTANCE_UM = 0.5


class EnsembleError(ValueError):
    pass


@dataclass
class AtomCloud:
    positions: np.ndarray          # (N, 3) um
    seed: object                   # seed material fed to the generator
    sigma: tuple = (1.0, 1.0, 6.0)
    n_resampled: int = 0           # draws rejected by the source-distance guard
    mean_ok: bool = True           # sample means within 5 sigma/sqrt(N) of 0

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


@dataclass
class CouplingField:
    d: np.ndarray                  # bare exchange D(R_j), rad/us
    d_tilde: np.ndarray            # second-order coupling at Omega_max, rad/us
    delta_tilde_offset: np.ndarray  # (Omega_max^2 - D_j^2)/Delta, rad/us
    d_bar: float                   # collective coupling at Omega_max, rad/us
    omega_max: float
    delta_big: float


@dataclass
class SpinWaveProfile:
    amplitudes: np.ndarray         # complex site amplitudes, unit norm
    hist_edges: dict = field(default_factory=dict)   # axis -> bin edges (um)
    hist_density: dict = field(default_factory=dict)  # axis -> density (1/um)


def sample_cloud(
    n_atoms: int,
    sigma,
    seed,
    source_pos=None,
    min_source_distance: float = MIN_SOURCE_DISTANCE_UM,
) -> AtomCloud:
    """Draw N atom positions i.i.d. from a centered axis-aligned Gaussian.

    Atoms falling within ``min_source_distance`` of the source are redrawn
    (the exchange model is invalid there); the number of redraws is kept on
    the returned cloud.  Output depends only on (seed, n_atoms, sigma).
    """
    sigma = np.asarray(sigma, dtype=float)
    if n_atoms < 0:
        raise EnsembleError("n_atoms must be >= 0")
    if np.any(sigma <= 0):
        raise EnsembleError("sigma components must be positive")
    rng = np.random.default_rng(seed)
    positions = rng.normal(0.0, 1.0, size=(n_atoms, 3)) * sigma
    n_resampled = 0
    if source_pos is not None and n_atoms > 0:
        source = np.asarray(source_pos, dtype=float)
        for _ in range(100):
            close = np.linalg.norm(positions - source, axis=1) < min_source_distance
            n_close = int(np.sum(close))
            if n_close == 0:
                break
            positions[close] = rng.normal(0.0, 1.0, size=(n_close, 3)) * sigma
            n_resampled += n_close
        else:
            raise EnsembleError("could not place atoms away from the source")
    mean_ok = True
    if n_atoms > 0:
        gate = 5.0 * sigma / np.sqrt(n_atoms)
        mean_ok = bool(np.all(np.abs(positions.mean(axis=0)) <= gate))
    return AtomCloud(
        positions=positions,
        seed=seed,
        sigma=tuple(float(s) for s in sigma),
        n_resampled=n_resampled,
        mean_ok=mean_ok,
    )


def dipole_coupling(r, r_s, c3_ghz_um3: float, axis=(0.0, 1.0, 0.0)):
    """Bare exchange coupling D(R) = C3/|R|^3 (1 - 3 cos^2 theta), rad/us.

    ``theta`` is measured from the dipole axis (default y).  Accepts a
    single position or an (N, 3) array.  Distances below 0.5 um trigger a
    warning (dipole approximation stressed); zero distance is an error.
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    rel = np.atleast_2d(r) - np.asarray(r_s, dtype=float)
    dist = np.linalg.norm(rel, axis=1)
    if np.any(dist == 0.0):
        raise EnsembleError("atom coincides with the source position")
    if np.any(dist < MIN_SOURCE_DISTANCE_UM):
        warnings.warn(
            "atom within 0.5 um of the source: point-dipole exchange is stressed",
            stacklevel=2,
        )
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    cos_t = rel @ axis / dist
    out = _C3_SCALE * c3_ghz_um3 / dist**3 * (1.0 - 3.0 * cos_t**2)
    return float(out[0]) if single else out


def effective_coupling(d, omega, delta_big):
    """Second-order drive-assisted coupling -D * Omega / Delta."""
    if delta_big == 0:
        raise EnsembleError("Delta must be non-zero for adiabatic elimination")
    return -np.asarray(d) * omega / delta_big


def effective_detuning(delta, omega, d, delta_big):
    """Shifted two-photon detuning delta + (|Omega|^2 - |D|^2)/Delta."""
    if delta_big == 0:
        raise EnsembleError("Delta must be non-zero for adiabatic elimination")
    return delta + (abs(omega) ** 2 - np.abs(np.asarray(d)) ** 2) / delta_big


def collective_coupling(d_tilde) -> float:
    """Root-sum-square of the second-order couplings."""
    d_tilde = np.asarray(d_tilde)
    if d_tilde.size == 0:
        warnings.warn("empty coupling field: collective coupling is 0", stacklevel=2)
        return 0.0
    return float(np.sqrt(np.sum(np.abs(d_tilde) ** 2)))


def build_coupling_field(
    cloud: AtomCloud,
    source_pos,
    c3_ghz_um3: float,
    omega_max: float,
    delta_big: float,
    axis=(0.0, 1.0, 0.0),
) -> CouplingField:
    """Evaluate bare and effective couplings for every atom of the cloud."""
    d = dipole_coupling(cloud.positions, source_pos, c3_ghz_um3, axis=axis)
    d = np.atleast_1d(d)
    d_tilde = effective_coupling(d, omega_max, delta_big)
    offset = (omega_max**2 - d**2) / delta_big
    return CouplingField(
        d=d,
        d_tilde=np.asarray(d_tilde, dtype=float),
        delta_tilde_offset=offset,
        d_bar=collective_coupling(d_tilde),
        omega_max=omega_max,
        delta_big=delta_big,
    )


def spin_wave_profile(
    cloud: AtomCloud,
    fld: CouplingField,
    k0_vec,
    bins: int = 61,
    range_in_sigma: float = 3.0,
) -> SpinWaveProfile:
    """Normalized stored-excitation amplitudes and their axis densities.

    Site amplitudes are proportional to the effective couplings with the
    drive-laser phase attached; densities are unit-area histograms of
    |amplitude|^2 over +-``range_in_sigma`` sigma per axis.
    """
    if fld.d_bar <= 0 or not np.any(fld.d_tilde):
        raise EnsembleError("all couplings vanish: no spin wave is defined")
    phases = np.exp(1j * cloud.positions @ np.asarray(k0_vec, dtype=float))
    amplitudes = fld.d_tilde * phases / fld.d_bar
    weights = np.abs(amplitudes) ** 2
    profile = SpinWaveProfile(amplitudes=amplitudes)
    for ax, name in enumerate("xyz"):
        half = range_in_sigma * cloud.sigma[ax]
        density, edges = np.histogram(
            cloud.positions[:, ax],
            bins=bins,
            range=(-half, half),
            weights=weights,
            density=True,
        )
        profile.hist_edges[name] = edges
        profile.hist_density[name] = density
    return profile


def collective_coupling_continuum(
    n_atoms: int,
    sigma,
    source_pos,
    c3_ghz_um3: float,
    omega_max: float,
    delta_big: float,
    axis=(0.0, 1.0, 0.0),
    nodes: int = 21,
) -> float:
    """Continuum estimate of the collective coupling, sqrt(N <D_tilde^2>).

    Gauss-Hermite quadrature over the Gaussian density; deterministic, used
    for validation guards without sampling a cloud.
    """
    if n_atoms == 0:
        return 0.0
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(TWO_PI)
    sigma = np.asarray(sigma, dtype=float)
    gx, gy, gz = np.meshgrid(x * sigma[0], x * sigma[1], x * sigma[2], indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    wt = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    # drop tail nodes inside the guard zone, like the sampler's resampling
    keep = (
        np.linalg.norm(pts - np.asarray(source_pos, float), axis=1)
        >= MIN_SOURCE_DISTANCE_UM
    )
    d = dipole_coupling(pts[keep], source_pos, c3_ghz_um3, axis=axis)
    mean_d2 = float(np.sum(wt[keep] * d**2))
    return abs(omega_max / delta_big) * np.sqrt(n_atoms * mean_d2)


def dump_cloud(cloud: AtomCloud, path) -> None:
    """Write atom positions as a CSV regression fixture (x_um,y_um,z_um)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_um", "y_um", "z_um"])
        for row in cloud.positions:
            writer.writerow([f"{v:.16e}" for v in row])


def load_cloud(path, sigma=(1.0, 1.0, 6.0)) -> AtomCloud:
    """Read positions written by :func:`dump_cloud`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x_um", "y_um", "z_um"]:
            raise EnsembleError(f"unexpected cloud CSV header: {header}")
        positions = np.array([[float(v) for v in row] for row in reader])
    if positions.size == 0:
        positions = positions.reshape(0, 3)
    return AtomCloud(positions=positions, seed=None, sigma=tuple(sigma))
