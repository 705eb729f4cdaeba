import numpy as np
import pytest

from rydsource import ExperimentConfig, ModeGridSpec, PulseSpec


def small_config(**overrides) -> ExperimentConfig:
    """Fast configuration for plumbing tests: small cloud, gentle chirp."""
    cfg = ExperimentConfig(
        n_atoms=30,
        realizations=6,
        pulse=PulseSpec(
            ramp_us=0.2,
            plateau_end_us=0.8,
            t_final_us=1.0,
            delta_start_mhz=-5.0,
            delta_end_mhz=5.0,
        ),
        dt_us=1e-3,
        mode_grid=ModeGridSpec(
            n_polar=24,
            n_azimuth=24,
            n_freq=41,
            coarse_n_polar=12,
            coarse_n_azimuth=12,
            cut_points=201,
        ),
        master_seed=424242,
    )
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


@pytest.fixture
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
