"""Monte Carlo campaign driver: sample, couple, prepare, emit, aggregate.

Each realization derives its random streams from (master_seed, index),
counter style, so results are independent of worker count and scheduling
order; aggregation walks records in index order.  Per-realization photon
states are kept on a reduced sphere to bound memory; full-resolution
angular data is retained only for a small number of flagged realizations.
"""

from __future__ import annotations

import datetime
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .config import ExperimentConfig, config_hash, validate_config
from .emission import (
    ModeGrid,
    PhotonState,
    cone_fraction,
    coupling_kernel,
    fwhm_from_cut,
    mode_overlap,
    participation_fraction,
    photon_amplitudes,
    polar_cut,
    wavevectors,
)
from .ensemble import build_coupling_field, sample_cloud, spin_wave_profile
from .preparation import integrate_preparation
from .presets import emission_linewidth

# seed-stream discriminators appended to (master_seed, index)
_STREAM_CLOUD = 0
_STREAM_NOISE = 1
_STREAM_OVERLAP = 2**20

MAX_FLAGGED = 16
SPINWAVE_BINS = 61
SPINWAVE_RANGE_SIGMA = 3.0

STAGES = ("couple", "prepare", "full")


class CampaignError(RuntimeError):
    pass


@dataclass
class RealizationRecord:
    index: int
    ok: bool = True
    error: str | None = None
    d_bar: float = np.nan
    eta: float = np.nan
    n_resampled: int = 0
    mean_ok: bool = True
    p_s_final: float = np.nan
    norm_lost: float = np.nan
    cone_conditional: float = np.nan
    cone_absolute: float = np.nan
    cone_conditional_inclined: float = np.nan
    cone_absolute_inclined: float = np.nan
    fwhm_x: float = np.nan
    fwhm_y: float = np.nan
    peak_angle_rad: float = np.nan
    hist_density: dict = field(default_factory=dict)   # axis -> density array
    coarse_angular: np.ndarray | None = None
    trajectory: object | None = None                   # flagged only
    cuts: dict | None = None                           # flagged only


@dataclass
class RunManifest:
    config_hash: str
    master_seed: int
    realizations: int
    code_version: str
    created_utc: str
    backend: str
    stages: str
    overrides: list
    warnings: list
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "schema": "manifest-v1",
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "realizations": self.realizations,
            "code_version": self.code_version,
            "created_utc": self.created_utc,
            "backend": self.backend,
            "stages": self.stages,
            "overrides": list(self.overrides),
            "warnings": list(self.warnings),
            "config": self.config,
        }


@dataclass
class CampaignResult:
    config: ExperimentConfig
    manifest: RunManifest
    stats: dict
    records: list
    coarse_grid: ModeGrid | None = None
    spectral: np.ndarray | None = None
    mean_angular: np.ndarray | None = None
    hist_edges: dict = field(default_factory=dict)

    def stored_state(self, record: RealizationRecord) -> PhotonState:
        """Rebuild the reduced-grid photon state of a realization."""
        if record.coarse_angular is None or self.coarse_grid is None:
            raise CampaignError(f"realization {record.index} has no stored state")
        total = float(
            np.sum(self.coarse_grid.weights * np.abs(record.coarse_angular) ** 2)
        )
        return PhotonState(
            grid=self.coarse_grid,
            angular=record.coarse_angular,
            spectral=self.spectral,
            total_prob=total,
        )


def resolve_threads(threads=None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("RYD_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _build_context(
    cfg: ExperimentConfig,
    stages: str,
    inclined_rad: float | None,
    cone_delta_theta: float,
    flagged: int,
    store_states: bool,
) -> dict:
    if stages not in STAGES:
        raise CampaignError(f"stages must be one of {STAGES}")
    species = cfg.species
    k0, kc, k_mag = wavevectors(species)
    hist_edges = {}
    for ax, name in enumerate("xyz"):
        half = SPINWAVE_RANGE_SIGMA * cfg.sigma_um[ax]
        hist_edges[name] = np.linspace(-half, half, SPINWAVE_BINS + 1)
    ctx: dict = {
        "species": species,
        "schedule": cfg.schedule(),
        "stages": stages,
        "flagged": min(int(flagged), MAX_FLAGGED),
        "cone_delta_theta": cone_delta_theta,
        "k0": k0,
        "kc": kc,
        "k_mag": k_mag,
        "hist_edges": hist_edges,
        "grid": None,
        "coarse_grid": None,
        "spectral_full": None,
        "spectral_coarse": None,
        "kc_inclined": None,
    }
    if stages == "full":
        w = emission_linewidth(cfg.omega_c, cfg.gamma_e)
        ctx["grid"] = ModeGrid.from_spec(cfg.mode_grid, k_mag, w)
        ctx["spectral_full"] = coupling_kernel(
            ctx["grid"].freqs, cfg.omega_c, cfg.gamma_e
        )
        if store_states:
            grid_c = ModeGrid.from_spec(cfg.mode_grid, k_mag, w, coarse=True)
            spectral_c = coupling_kernel(grid_c.freqs, cfg.omega_c, cfg.gamma_e)
            # stored states share one spectral profile; keep it unit-normalized
            spectral_c = spectral_c / np.sqrt(
                np.sum(grid_c.freq_weights * np.abs(spectral_c) ** 2)
            )
            ctx["coarse_grid"] = grid_c
            ctx["spectral_coarse"] = spectral_c
        if inclined_rad is not None:
            _, kc_inc, _ = wavevectors(species, inclination_rad=inclined_rad)
            ctx["kc_inclined"] = kc_inc
    return ctx


def _run_one(cfg: ExperimentConfig, index: int, ctx: dict) -> RealizationRecord:
    rec = RealizationRecord(index=index)
    species = ctx["species"]
    cloud = sample_cloud(
        cfg.n_atoms,
        cfg.sigma_um,
        seed=(cfg.master_seed, index, _STREAM_CLOUD),
        source_pos=cfg.source_pos_um,
    )
    fld = build_coupling_field(
        cloud,
        cfg.source_pos_um,
        species.c3_ghz_um3,
        cfg.omega_max,
        cfg.delta_big,
        axis=cfg.dipole_axis,
    )
    profile = spin_wave_profile(
        cloud, fld, ctx["k0"], bins=SPINWAVE_BINS,
        range_in_sigma=SPINWAVE_RANGE_SIGMA,
    )
    rec.d_bar = fld.d_bar
    rec.eta = participation_fraction(profile.amplitudes)
    rec.n_resampled = cloud.n_resampled
    rec.mean_ok = cloud.mean_ok
    rec.hist_density = {ax: profile.hist_density[ax] for ax in "xyz"}
    if ctx["stages"] == "couple":
        return rec

    traj = integrate_preparation(
        fld,
        ctx["schedule"],
        gamma_s=cfg.gamma_s_per_us,
        gamma_sg=cfg.gamma_sg_per_us,
        dt=cfg.dt_us,
        noise_seed=(cfg.master_seed, index, _STREAM_NOISE),
        dt_out=cfg.dt_out_us,
    )
    rec.p_s_final = float(traj.p_s[-1])
    rec.norm_lost = float(traj.norm_lost[-1])
    if index < ctx["flagged"]:
        rec.trajectory = traj
    if ctx["stages"] == "prepare":
        return rec

    c_stored = traj.final_state.c
    k0, kc, k_mag = ctx["k0"], ctx["kc"], ctx["k_mag"]
    state = photon_amplitudes(
        c_stored,
        cloud.positions,
        k0,
        kc,
        ctx["grid"],
        spectral=ctx["spectral_full"],
        total_prob=rec.p_s_final,
    )
    cone = cone_fraction(state, axis=(0, 0, 1), delta_theta=ctx["cone_delta_theta"])
    rec.cone_conditional = cone.conditional
    rec.cone_absolute = cone.absolute
    rec.peak_angle_rad = state.peak_angle_from((0, 0, 1))

    theta_x, cut_x = polar_cut(
        c_stored, cloud.positions, k0, kc, k_mag, plane="xz",
        n_points=cfg.mode_grid.cut_points, scale=state.density_scale,
    )
    theta_y, cut_y = polar_cut(
        c_stored, cloud.positions, k0, kc, k_mag, plane="yz",
        n_points=cfg.mode_grid.cut_points, scale=state.density_scale,
    )
    rec.fwhm_x = fwhm_from_cut(theta_x, cut_x)
    rec.fwhm_y = fwhm_from_cut(theta_y, cut_y)
    if index < ctx["flagged"]:
        rec.cuts = {"theta": theta_x, "xz": cut_x, "yz": cut_y}

    if ctx["coarse_grid"] is not None:
        coarse = photon_amplitudes(
            c_stored,
            cloud.positions,
            k0,
            kc,
            ctx["coarse_grid"],
            spectral=ctx["spectral_coarse"],
            total_prob=rec.p_s_final,
        )
        rec.coarse_angular = coarse.angular

    if ctx["kc_inclined"] is not None:
        inclined = photon_amplitudes(
            c_stored,
            cloud.positions,
            k0,
            ctx["kc_inclined"],
            ctx["grid"],
            spectral=ctx["spectral_full"],
            total_prob=rec.p_s_final,
        )
        cone_i = cone_fraction(
            inclined, axis=(0, 0, 1), delta_theta=ctx["cone_delta_theta"]
        )
        rec.cone_conditional_inclined = cone_i.conditional
        rec.cone_absolute_inclined = cone_i.absolute
    return rec


def run_campaign(
    cfg: ExperimentConfig,
    *,
    stages: str = "full",
    threads: int | None = None,
    inclined_rad: float | None = None,
    cone_delta_theta: float = 0.07 * np.pi,
    flagged: int = 1,
    overlap_pairs: int = 200,
    store_states: bool = True,
    overrides: list | None = None,
    validate: bool = True,
    progress: bool = False,
) -> CampaignResult:
    """Run ``cfg.realizations`` independent realizations and aggregate them.

    stages: "couple" (cloud and couplings only), "prepare" (adds the
    amplitude integration) or "full" (adds photon emission).  Identical
    (master_seed, config) give bit-identical aggregates for any thread
    count.  Realizations that raise are recorded, excluded and counted;
    the campaign fails if more than 1% fail.
    """
    warnings_list = validate_config(cfg) if validate else []
    ctx = _build_context(
        cfg, stages, inclined_rad, cone_delta_theta, flagged, store_states
    )
    n_workers = resolve_threads(threads)

    def work(index):
        try:
            return _run_one(cfg, index, ctx)
        except Exception as exc:  # recorded, excluded, counted
            return RealizationRecord(index=index, ok=False, error=repr(exc))

    indices = list(range(cfg.realizations))
    if n_workers == 1 or cfg.realizations <= 1:
        records = [work(i) for i in indices]
    else:
        records = [work(indices[0])]  # warm compiled kernels before fan-out
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            records += list(pool.map(work, indices[1:]))
    records.sort(key=lambda r: r.index)
    if progress:
        done = sum(r.ok for r in records)
        print(f"campaign: {done}/{len(records)} realizations ok")

    failed = [r for r in records if not r.ok]
    if failed and len(failed) > 0.01 * max(1, cfg.realizations):
        raise CampaignError(
            f"{len(failed)} of {cfg.realizations} realizations failed "
            f"(first error: {failed[0].error})"
        )

    stats, mean_angular = aggregate(records, ctx, cfg, overlap_pairs=overlap_pairs)
    manifest = RunManifest(
        config_hash=config_hash(cfg),
        master_seed=cfg.master_seed,
        realizations=cfg.realizations,
        code_version=__version__,
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        backend=kernels.backend_name(),
        stages=stages,
        overrides=list(overrides or []),
        warnings=warnings_list,
        config=cfg.to_json_dict(),
    )
    return CampaignResult(
        config=cfg,
        manifest=manifest,
        stats=stats,
        records=records,
        coarse_grid=ctx["coarse_grid"],
        spectral=ctx["spectral_coarse"],
        mean_angular=mean_angular,
        hist_edges=ctx["hist_edges"],
    )


def rerun_realization(
    cfg: ExperimentConfig,
    index: int,
    *,
    stages: str = "full",
    inclined_rad: float | None = None,
    cone_delta_theta: float = 0.07 * np.pi,
    store_states: bool = True,
) -> RealizationRecord:
    """Re-run one realization in isolation; reproduces the campaign record."""
    ctx = _build_context(
        cfg, stages, inclined_rad, cone_delta_theta, flagged=0,
        store_states=store_states,
    )
    return _run_one(cfg, index, ctx)


def _summary(values) -> dict | None:
    values = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if values.size == 0:
        return None
    counts, edges = np.histogram(values, bins=24)
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "min": float(values.min()),
        "max": float(values.max()),
        "median": float(np.median(values)),
        "n": int(values.size),
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


def aggregate(records, ctx, cfg, overlap_pairs: int = 200):
    """Order-independent aggregation; returns (stats dict, mean angular map)."""
    records = sorted(records, key=lambda r: r.index)
    good = [r for r in records if r.ok]
    stats: dict = {
        "schema": "stats-v1",
        "realizations": len(records),
        "failed": len(records) - len(good),
        "failed_indices": [r.index for r in records if not r.ok],
        "n_resampled_total": int(sum(r.n_resampled for r in good)),
        "mean_gate_flags": int(sum(not r.mean_ok for r in good)),
    }
    metrics = {
        "d_bar": [r.d_bar for r in good],
        "eta": [r.eta for r in good],
        "p_s": [r.p_s_final for r in good],
        "norm_lost": [r.norm_lost for r in good],
        "cone_fraction": [r.cone_conditional for r in good],
        "cone_fraction_abs": [r.cone_absolute for r in good],
        "cone_fraction_inclined": [r.cone_conditional_inclined for r in good],
        "cone_fraction_abs_inclined": [r.cone_absolute_inclined for r in good],
        "fwhm_x": [r.fwhm_x for r in good],
        "fwhm_y": [r.fwhm_y for r in good],
        "peak_angle": [r.peak_angle_rad for r in good],
    }
    for name, values in metrics.items():
        summary = _summary(values)
        if summary is not None:
            stats[name] = summary

    hists = {}
    for ax in "xyz":
        densities = [r.hist_density[ax] for r in good if ax in r.hist_density]
        if densities:
            hists[ax] = {
                "edges": [float(e) for e in ctx["hist_edges"][ax]],
                "density": [float(v) for v in np.mean(densities, axis=0)],
            }
    if hists:
        stats["spinwave_hist"] = hists

    mean_angular = None
    if ctx.get("coarse_grid") is not None:
        stored = [r for r in good if r.coarse_angular is not None]
        if len(stored) >= 2:
            stats["overlap"] = overlap_sampling_arrays(
                [r.coarse_angular for r in stored],
                ctx["coarse_grid"],
                ctx["spectral_coarse"],
                n_pairs=overlap_pairs,
                seed=(cfg.master_seed, _STREAM_OVERLAP),
            )
        if stored:
            mean_angular = np.mean(
                [np.abs(r.coarse_angular) ** 2 for r in stored], axis=0
            )
            stats["mean_angular_total"] = float(
                np.sum(ctx["coarse_grid"].weights * mean_angular)
            )
    return stats, mean_angular


# Reproducibility window: twice the reference cone half-angle.  The overlap
# of the directed photon mode is evaluated inside this forward cap; over the
# full sphere the uncorrelated single-atom emission floor (the ~1/4 of the
# probability outside the phase-matched lobe) bounds any pair overlap away
# from the reproducibility figure regardless of ensemble quality.
OVERLAP_WINDOW_THETA = 0.14 * np.pi


def overlap_sampling_arrays(
    angulars,
    grid: ModeGrid,
    spectral,
    n_pairs: int,
    seed,
    window_theta: float = OVERLAP_WINDOW_THETA,
) -> dict:
    """Pairwise directed-mode overlaps over sampled distinct state pairs."""
    n = len(angulars)
    if n < 2:
        raise CampaignError("need at least 2 stored photon states for overlaps")
    ii, jj = np.triu_indices(n, k=1)
    rng = np.random.default_rng(seed)
    take = min(n_pairs, ii.size)
    sel = np.sort(rng.choice(ii.size, size=take, replace=False))

    def state(idx):
        return PhotonState(
            grid=grid,
            angular=angulars[idx],
            spectral=spectral,
            total_prob=float(np.sum(grid.weights * np.abs(angulars[idx]) ** 2)),
        )

    values = np.asarray(
        [
            mode_overlap(state(int(ii[s])), state(int(jj[s])), window_theta).normalized
            for s in sel
        ]
    )
    return {
        "mean": float(values.mean()),
        "min": float(values.min()),
        "n_pairs": int(take),
        "window_theta_rad": float(window_theta),
    }


def overlap_sampling(
    result: CampaignResult,
    n_pairs: int = 200,
    seed=None,
    window_theta: float = OVERLAP_WINDOW_THETA,
) -> dict:
    """Overlap summary over the stored reduced-grid states of a campaign."""
    stored = [r for r in result.records if r.ok and r.coarse_angular is not None]
    if len(stored) < 2:
        raise CampaignError("need at least 2 stored photon states for overlaps")
    if seed is None:
        seed = (result.config.master_seed, _STREAM_OVERLAP)
    return overlap_sampling_arrays(
        [r.coarse_angular for r in stored],
        result.coarse_grid,
        result.spectral,
        n_pairs=n_pairs,
        seed=seed,
        window_theta=window_theta,
    )


def flatten_stats(stats: dict, prefix: str = "") -> dict:
    """Flatten scalar leaves to underscore-joined keys for CLI assertions."""
    flat: dict = {}
    for key, value in stats.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_stats(value, prefix=f"{name}_"))
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            flat[name] = float(value)
    return flat


def write_campaign(result: CampaignResult, outdir) -> None:
    """Persist manifest, statistics and figure-ready CSV artifacts."""
    from pathlib import Path

    from . import outputs

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs.write_json(outdir / "manifest.json", result.manifest.to_json_dict())
    outputs.write_json(outdir / "stats.json", result.stats)

    if "spinwave_hist" in result.stats:
        hists = {
            ax: (
                result.stats["spinwave_hist"][ax]["edges"],
                result.stats["spinwave_hist"][ax]["density"],
            )
            for ax in "xyz"
        }
        outputs.write_spinwave_hist_csv(outdir / "spinwave_hist.csv", hists)

    traj_dir = outdir / "trajectories"
    ang_dir = outdir / "angular"
    for rec in result.records:
        if rec.trajectory is not None:
            traj_dir.mkdir(exist_ok=True)
            outputs.write_trajectory_csv(
                traj_dir / f"r{rec.index:05d}.csv", rec.trajectory
            )
        if rec.cuts is not None:
            ang_dir.mkdir(exist_ok=True)
            outputs.write_cut_csv(
                ang_dir / f"cut_xz_r{rec.index:05d}.csv",
                rec.cuts["theta"],
                rec.cuts["xz"],
            )
            outputs.write_cut_csv(
                ang_dir / f"cut_yz_r{rec.index:05d}.csv",
                rec.cuts["theta"],
                rec.cuts["yz"],
            )
    if result.mean_angular is not None:
        ang_dir.mkdir(exist_ok=True)
        from . import outputs as _o

        _o.write_sphere_csv(
            ang_dir / "mean_sphere.csv", result.coarse_grid, result.mean_angular
        )
        density = np.abs(result.spectral) ** 2
        _o.write_spectrum_csv(
            ang_dir / "spectrum.csv", result.coarse_grid.freqs, density
        )
