"""Experiment configuration: JSON schema, validation, canonical hashing.

The config file is a flat JSON document whose keys mirror the dataclass
fields one-for-one, with units spelled out in the key names
(``omega_max_mhz``, ``gamma_s_per_us``, ``sigma_um``).  The dataclass
stores the file-facing values verbatim, so load/save round-trips are
bit-exact; canonical-unit views (rad/us) are exposed as properties.
Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .presets import PRESETS, SpeciesPreset, preset
from .pulses import PulseSchedule
from .units import mhz_to_rad_per_us


class ConfigError(ValueError):
    """Raised for malformed, unknown-key or non-physical configuration input."""


@dataclass
class PulseSpec:
    ramp_us: float = 0.3
    plateau_end_us: float = 1.2
    t_final_us: float = 1.5
    delta_start_mhz: float = -30.0
    delta_end_mhz: float = 30.0

    def schedule(self, omega_max: float) -> PulseSchedule:
        return PulseSchedule(
            omega_max=omega_max,
            ramp_us=self.ramp_us,
            plateau_end_us=self.plateau_end_us,
            t_final_us=self.t_final_us,
            delta_start=mhz_to_rad_per_us(self.delta_start_mhz),
            delta_end=mhz_to_rad_per_us(self.delta_end_mhz),
        )


@dataclass
class ModeGridSpec:
    n_polar: int = 128          # Gauss-Legendre nodes in cos(theta)
    n_azimuth: int = 256        # uniform azimuthal nodes
    n_freq: int = 201           # frequency samples across the window
    freq_window_w: float = 20.0  # half-window in units of the linewidth w
    coarse_n_polar: int = 64    # reduced sphere kept per realization
    coarse_n_azimuth: int = 96
    cut_points: int = 1601      # samples per polar-cut plane


@dataclass
class ExperimentConfig:
    preset: str = "CsRb_70P"
    n_atoms: int = 1000
    sigma_um: tuple = (1.0, 1.0, 6.0)
    source_pos_um: tuple = (7.0, 0.0, 0.0)
    omega_max_mhz: float = 10.0
    delta_mhz: float = 94.0
    pulse: PulseSpec = field(default_factory=PulseSpec)
    gamma_s_per_us: float = 0.01
    gamma_sg_per_us: float = 0.01
    omega_c_mhz: float = 1.0
    gamma_e_mhz: float = 6.07
    dt_us: float = 2.5e-4
    dt_out_us: float = 0.01
    realizations: int = 2000
    master_seed: int = 7041
    mode_grid: ModeGridSpec = field(default_factory=ModeGridSpec)
    dipole_axis: tuple = (0.0, 1.0, 0.0)

    # --- canonical-unit views -------------------------------------------------

    @property
    def species(self) -> SpeciesPreset:
        return preset(self.preset)

    @property
    def omega_max(self) -> float:
        return mhz_to_rad_per_us(self.omega_max_mhz)

    @property
    def delta_big(self) -> float:
        return mhz_to_rad_per_us(self.delta_mhz)

    @property
    def omega_c(self) -> float:
        return mhz_to_rad_per_us(self.omega_c_mhz)

    @property
    def gamma_e(self) -> float:
        return mhz_to_rad_per_us(self.gamma_e_mhz)

    def schedule(self) -> PulseSchedule:
        return self.pulse.schedule(self.omega_max)

    # --- (de)serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["sigma_um"] = list(self.sigma_um)
        d["source_pos_um"] = list(self.source_pos_um)
        d["dipole_axis"] = list(self.dipole_axis)
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "pulse" in data:
            pkeys = {f.name for f in fields(PulseSpec)}
            bad = set(data["pulse"]) - pkeys
            if bad:
                raise ConfigError(f"unknown pulse keys: {sorted(bad)}")
            data["pulse"] = PulseSpec(**data["pulse"])
        if "mode_grid" in data:
            gkeys = {f.name for f in fields(ModeGridSpec)}
            bad = set(data["mode_grid"]) - gkeys
            if bad:
                raise ConfigError(f"unknown mode_grid keys: {sorted(bad)}")
            data["mode_grid"] = ModeGridSpec(**data["mode_grid"])
        for key in ("sigma_um", "source_pos_um", "dipole_axis"):
            if key in data:
                seq = data[key]
                if len(seq) != 3:
                    raise ConfigError(f"{key} must have exactly 3 components")
                data[key] = tuple(float(x) for x in seq)
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_json_dict(data)


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides to a raw config dict."""
    out = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} indexes into a non-object")
        node[parts[-1]] = value
    return out


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonicalized config document (sorted keys, tight JSON)."""
    blob = json.dumps(cfg.to_json_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Check physical sanity; return warnings, raise ConfigError on violations."""
    from .ensemble import collective_coupling_continuum, dipole_coupling

    sp = cfg.species  # raises on unknown preset

    if cfg.n_atoms < 0:
        raise ConfigError("n_atoms must be >= 0")
    if cfg.n_atoms == 0 and cfg.realizations > 0:
        raise ConfigError("n_atoms = 0 cannot produce statistics over realizations")
    if cfg.realizations < 1:
        raise ConfigError("realizations must be >= 1")
    if any(s <= 0 for s in cfg.sigma_um):
        raise ConfigError("all cloud sigmas must be positive")
    if min(cfg.omega_max_mhz, cfg.delta_mhz, cfg.omega_c_mhz, cfg.gamma_e_mhz) < 0:
        raise ConfigError("rates must be non-negative")
    if cfg.gamma_s_per_us < 0 or cfg.gamma_sg_per_us < 0:
        raise ConfigError("decay and dephasing rates must be non-negative")
    if cfg.dt_us <= 0 or cfg.dt_out_us <= 0:
        raise ConfigError("time steps must be positive")
    if np.linalg.norm(cfg.dipole_axis) == 0:
        raise ConfigError("dipole_axis must be a non-zero vector")

    sched = cfg.schedule()  # raises on inconsistent pulse timing

    # The effective model needs the source outside the transverse cloud extent.
    if abs(cfg.source_pos_um[0]) <= 3.0 * cfg.sigma_um[0]:
        raise ConfigError(
            "source atom must sit outside the 3-sigma transverse extent "
            f"(|x_s| = {abs(cfg.source_pos_um[0])} um <= 3 sigma_x)"
        )

    d_bar_est = collective_coupling_continuum(
        cfg.n_atoms,
        cfg.sigma_um,
        cfg.source_pos_um,
        sp.c3_ghz_um3,
        cfg.omega_max,
        cfg.delta_big,
        axis=cfg.dipole_axis,
    )
    stiff = max(
        cfg.omega_max,
        abs(sched.delta_start),
        abs(sched.delta_end),
        d_bar_est,
    )
    if stiff * cfg.dt_us >= 0.1:
        raise ConfigError(
            f"dt_us = {cfg.dt_us} too coarse: max(|Omega|,|delta|,D_bar) * dt = "
            f"{stiff * cfg.dt_us:.3f} >= 0.1"
        )

    warnings: list[str] = []
    if cfg.delta_big < 9.0 * cfg.omega_max:
        warnings.append(
            "adiabatic elimination degraded: Delta < 9 Omega_max "
            f"(Delta = {cfg.delta_mhz} MHz, Omega_max = {cfg.omega_max_mhz} MHz)"
        )
    # Strongest coupling seen by a typical extreme atom (2 sigma_x toward source).
    probe = np.array([2.0 * cfg.sigma_um[0] * np.sign(cfg.source_pos_um[0] or 1.0), 0.0, 0.0])
    d_probe = abs(
        float(
            dipole_coupling(
                probe, np.asarray(cfg.source_pos_um, float), sp.c3_ghz_um3,
                axis=cfg.dipole_axis,
            )
        )
    )
    if d_probe > 0.3 * abs(sp.delta_sa):
        warnings.append(
            "adiabatic elimination degraded: typical max |D| = "
            f"{d_probe:.1f} rad/us exceeds 0.3 |delta_sa|"
        )
    if not sched.is_adiabatic(d_bar_est) and cfg.n_atoms > 0:
        warnings.append(
            f"chirp rate {sched.chirp_rate:.1f} rad/us^2 is not below "
            f"D_bar^2 = {d_bar_est**2:.1f}; passage may be diabatic"
        )
    return warnings


def fig2_config(**overrides) -> ExperimentConfig:
    """Headline ensemble configuration (N = 1000 elongated cloud)."""
    cfg = ExperimentConfig()
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    return cfg
