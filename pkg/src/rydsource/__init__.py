"""Simulator of a deterministic free-space single-photon source.

A single excited source atom drives a collective excitation of a
disordered atomic ensemble through laser-assisted exchange coupling and a
chirped adiabatic passage; the stored excitation is then converted into a
photon whose spatio-temporal mode, angular concentration and
reproducibility this package computes, together with an independent 1D
transparency model for the retrieval step.
"""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    ConfigError,
    ExperimentConfig,
    ModeGridSpec,
    PulseSpec,
    apply_overrides,
    config_hash,
    fig2_config,
    validate_config,
)
from .emission import (  # noqa: F401
    ModeGrid,
    PhotonBudget,
    PhotonState,
    cone_fraction,
    coupling_kernel,
    fwhm_from_cut,
    mode_overlap,
    participation_fraction,
    photon_amplitudes,
    photon_budget,
    polar_cut,
    single_step_amplitudes,
    solid_angle,
    wavevectors,
)
from .ensemble import (  # noqa: F401
    AtomCloud,
    CouplingField,
    SpinWaveProfile,
    build_coupling_field,
    collective_coupling,
    dipole_coupling,
    dump_cloud,
    effective_coupling,
    effective_detuning,
    load_cloud,
    sample_cloud,
    spin_wave_profile,
)
from .eit import (  # noqa: F401
    EitMedium,
    PolaritonField,
    group_velocity,
    mixing_angle,
    polariton_propagate,
    susceptibility,
    transparency_hwhm,
    transparency_profile,
)
from .harness import (  # noqa: F401
    CampaignError,
    CampaignResult,
    RealizationRecord,
    RunManifest,
    overlap_sampling,
    rerun_realization,
    run_campaign,
    write_campaign,
)
from .preparation import (  # noqa: F401
    PreparationState,
    Trajectory,
    dephasing_increment,
    full_model_oracle,
    heralding_report,
    integrate_preparation,
    lz_numeric,
    lz_probability,
    two_level_eigen,
)
from .presets import (  # noqa: F401
    PRESETS,
    PresetError,
    SpeciesPreset,
    emission_linewidth,
    phase_match_wavenumber,
    preset,
)
from .pulses import ConstantSchedule, PulseSchedule, fig2_schedule  # noqa: F401
