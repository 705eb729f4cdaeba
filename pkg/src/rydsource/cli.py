"""Command-line front end.

Subcommands expose the full pipeline and each stage individually; outputs
are figure-ready CSV/JSON files.  Exit codes: 0 success, 1 error, 2 an
``--assert`` expression failed.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels, outputs
from .config import ConfigError, ExperimentConfig, apply_overrides, validate_config
from .eit import (
    EitMedium,
    PolaritonField,
    absorption_coefficient,
    mixing_angle,
    polariton_propagate,
    susceptibility,
    transparency_hwhm,
)
from .emission import photon_budget, single_step_amplitudes, solid_angle, wavevectors
from .ensemble import build_coupling_field, sample_cloud, spin_wave_profile
from .harness import (
    CampaignError,
    flatten_stats,
    rerun_realization,
    resolve_threads,
    run_campaign,
    write_campaign,
)
from .preparation import integrate_preparation, lz_numeric, lz_probability
from .presets import PRESETS, emission_linewidth
from .units import TWO_PI, rad_per_us_to_mhz

_ASSERT_RE = re.compile(r"^\s*([A-Za-z0-9_.]+)\s*(>=|<=|==|>|<)\s*(\S+)\s*$")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERT = 2


class AssertionMiss(Exception):
    pass


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config PATH is required for this command")
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    data = json.loads(path.read_text())
    overrides = list(args.set or [])
    if overrides:
        data = apply_overrides(data, overrides)
    cfg = ExperimentConfig.from_json_dict(data)
    if args.seed is not None:
        cfg.master_seed = int(args.seed)
        overrides.append(f"master_seed={args.seed}")
    args._overrides = overrides
    for line in validate_config(cfg):
        print(f"warning: {line}", file=sys.stderr)
    return cfg


def _check_assertions(stats: dict, exprs, quiet=False) -> None:
    flat = flatten_stats(stats)
    for expr in exprs or []:
        m = _ASSERT_RE.match(expr)
        if not m:
            raise ConfigError(f"cannot parse assertion {expr!r}")
        key, op, raw = m.groups()
        key = key.replace(".", "_")
        if key not in flat:
            close = [k for k in sorted(flat) if key.split("_")[0] in k][:8]
            raise ConfigError(f"unknown stats key {key!r}; nearby keys: {close}")
        value = flat[key]
        target = float(raw)
        ok = {
            ">=": value >= target,
            "<=": value <= target,
            ">": value > target,
            "<": value < target,
            "==": value == target,
        }[op]
        status = "pass" if ok else "MISS"
        if not quiet:
            print(f"assert {key} {op} {target:g}: {status} (value = {value:.6g})")
        if not ok:
            raise AssertionMiss(expr)


def _outdir(args) -> Path:
    if not args.out:
        raise ConfigError("--out DIR is required for this command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_state_files(outdir: Path, tag: str, state, cuts=None) -> None:
    outputs.write_sphere_csv(outdir / f"sphere_{tag}.csv", state.grid, state.p_angular)
    outputs.write_spectrum_csv(
        outdir / f"spectrum_{tag}.csv", state.grid.freqs, state.spectrum()
    )
    if cuts:
        theta, cut_x, cut_y = cuts
        outputs.write_cut_csv(outdir / f"cut_xz_{tag}.csv", theta, cut_x)
        outputs.write_cut_csv(outdir / f"cut_yz_{tag}.csv", theta, cut_y)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_presets(args) -> int:
    table = {}
    for name, p in PRESETS.items():
        table[name] = {
            "c3_ghz_um3": p.c3_ghz_um3,
            "delta_sa_mhz": rad_per_us_to_mhz(p.delta_sa),
            "lambda_excite_nm": p.lambda_excite_nm,
            "lambda_control_nm": p.lambda_control_nm,
            "lambda_photon_nm": p.lambda_photon_nm,
            "gamma_e_mhz": rad_per_us_to_mhz(p.gamma_e),
            "levels": p.levels,
        }
    print(outputs.dumps_fixed(table))
    return EXIT_OK


def cmd_budget(args) -> int:
    budget = photon_budget(
        eta=args.eta,
        n_atoms=args.n_atoms,
        delta_theta=args.delta_theta_rad,
        p_i_prime=args.p_i_prime,
        p_eg=args.p_eg,
    )
    doc = {
        "schema": "budget-v1",
        "eta": budget.eta,
        "n_atoms": budget.n_atoms,
        "delta_theta_rad": budget.delta_theta_rad,
        "delta_omega_sr": budget.delta_omega_sr,
        "p_cone_geometric": budget.p_cone_geometric,
        "p_cone_collective": budget.p_cone_collective,
        "collective_estimate_raw": budget.collective_estimate_raw,
        "p_i_prime": budget.p_i_prime,
        "p_eg": budget.p_eg,
        "p_multi": budget.p_multi,
    }
    print(outputs.dumps_fixed(doc))
    if args.out:
        outputs.write_json(_outdir(args) / "budget.json", doc)
    _check_assertions(doc, args.assert_, quiet=args.quiet)
    return EXIT_OK


def cmd_lz_validate(args) -> int:
    d_bar = TWO_PI * args.d_bar_mhz
    if args.alpha_mhz_per_us:
        alphas = [TWO_PI * a for a in args.alpha_mhz_per_us]
    else:
        # sweep spanning transfer probabilities 1e-3 .. 0.9
        probs = np.geomspace(1e-3, 0.9, args.points)
        alphas = [TWO_PI * d_bar**2 / -np.log(p) for p in probs]
    rows = []
    max_err = 0.0
    for alpha in alphas:
        analytic = lz_probability(d_bar, alpha)
        numeric = lz_numeric(d_bar, alpha)
        err = abs(analytic - numeric)
        max_err = max(max_err, err)
        rows.append((alpha, analytic, numeric, err))
        if not args.quiet:
            print(
                f"alpha = {alpha:12.4f} rad/us^2  analytic = {analytic:.6f}  "
                f"numeric = {numeric:.6f}  |err| = {err:.2e}"
            )
    if args.out:
        outputs.write_csv(
            _outdir(args) / "lz_validate.csv",
            "lz-validate-v1",
            ["alpha_rad_per_us2", "p_analytic", "p_numeric", "abs_error"],
            rows,
        )
    if not args.quiet:
        print(f"max |analytic - numeric| = {max_err:.3e}")
    if max_err >= 2e-3:
        print("lz-validate: max error exceeds 2e-3", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def _run_campaign_command(args, stages: str) -> int:
    cfg = _load_config(args)
    result = run_campaign(
        cfg,
        stages=stages,
        threads=resolve_threads(args.threads),
        inclined_rad=args.inclined_rad,
        flagged=args.flagged,
        overrides=args._overrides,
        progress=not args.quiet,
    )
    write_campaign(result, _outdir(args))
    if not args.quiet:
        for key in ("p_s", "d_bar", "cone_fraction", "eta"):
            if key in result.stats:
                s = result.stats[key]
                print(f"{key}: mean = {s['mean']:.6g} (std {s['std']:.3g})")
    _check_assertions(result.stats, args.assert_, quiet=args.quiet)
    return EXIT_OK


def cmd_campaign(args) -> int:
    return _run_campaign_command(args, "full")


def cmd_prepare(args) -> int:
    return _run_campaign_command(args, "prepare")


def cmd_emit(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(args)
    rec = rerun_realization(
        cfg, args.realization, stages="full", inclined_rad=args.inclined_rad
    )
    summary = {
        "schema": "emit-v1",
        "realization": rec.index,
        "p_s_final": rec.p_s_final,
        "d_bar": rec.d_bar,
        "eta": rec.eta,
        "cone_fraction": rec.cone_conditional,
        "cone_fraction_abs": rec.cone_absolute,
        "cone_fraction_inclined": rec.cone_conditional_inclined,
        "fwhm_x_rad": rec.fwhm_x,
        "fwhm_y_rad": rec.fwhm_y,
        "peak_angle_rad": rec.peak_angle_rad,
    }
    outputs.write_json(outdir / "emit_summary.json", summary)
    # regenerate exportable per-realization artifacts
    species = cfg.species
    k0, kc, k_mag = wavevectors(species)
    cloud = sample_cloud(
        cfg.n_atoms, cfg.sigma_um,
        seed=(cfg.master_seed, args.realization, 0),
        source_pos=cfg.source_pos_um,
    )
    fld = build_coupling_field(
        cloud, cfg.source_pos_um, species.c3_ghz_um3, cfg.omega_max,
        cfg.delta_big, axis=cfg.dipole_axis,
    )
    traj = integrate_preparation(
        fld, cfg.schedule(),
        gamma_s=cfg.gamma_s_per_us, gamma_sg=cfg.gamma_sg_per_us,
        dt=cfg.dt_us, noise_seed=(cfg.master_seed, args.realization, 1),
        dt_out=cfg.dt_out_us,
    )
    outputs.write_trajectory_csv(outdir / "trajectory.csv", traj)
    from .emission import ModeGrid, coupling_kernel, photon_amplitudes, polar_cut

    w = emission_linewidth(cfg.omega_c, cfg.gamma_e)
    grid = ModeGrid.from_spec(cfg.mode_grid, k_mag, w)
    state = photon_amplitudes(
        traj.final_state.c, cloud.positions, k0, kc, grid,
        spectral=coupling_kernel(grid.freqs, cfg.omega_c, cfg.gamma_e),
        total_prob=float(traj.p_s[-1]),
    )
    theta, cut_x = polar_cut(
        traj.final_state.c, cloud.positions, k0, kc, k_mag, plane="xz",
        n_points=cfg.mode_grid.cut_points, scale=state.density_scale,
    )
    _, cut_y = polar_cut(
        traj.final_state.c, cloud.positions, k0, kc, k_mag, plane="yz",
        n_points=cfg.mode_grid.cut_points, scale=state.density_scale,
    )
    _emit_state_files(outdir, f"r{args.realization:05d}", state, (theta, cut_x, cut_y))
    print(outputs.dumps_fixed(summary))
    _check_assertions(summary, args.assert_, quiet=args.quiet)
    return EXIT_OK


def cmd_single_step(args) -> int:
    cfg = _load_config(args)
    outdir = _outdir(args)
    species = cfg.species
    k0, kc, k_mag = wavevectors(species)
    cloud = sample_cloud(
        cfg.n_atoms, cfg.sigma_um,
        seed=(cfg.master_seed, args.realization, 0),
        source_pos=cfg.source_pos_um,
    )
    fld = build_coupling_field(
        cloud, cfg.source_pos_um, species.c3_ghz_um3, cfg.omega_max,
        cfg.delta_big, axis=cfg.dipole_axis,
    )
    from .emission import ModeGrid

    w = emission_linewidth(cfg.omega_c, cfg.gamma_e)
    grid = ModeGrid.from_spec(cfg.mode_grid, k_mag, w)
    result = single_step_amplitudes(
        fld, cfg.schedule(), cfg.omega_c, cfg.gamma_e,
        cloud.positions, k0, kc, grid, gamma_s=cfg.gamma_s_per_us,
    )
    outputs.write_csv(
        outdir / "wavepacket.csv",
        "wavepacket-v1",
        ["t_us", "envelope", "p_ground"],
        zip(result.times, result.envelope, result.c0_of_t**2),
    )
    _emit_state_files(outdir, "single_step", result.state)
    doc = {
        "schema": "single-step-v1",
        "extraction_prob": result.extraction_prob,
        "linewidth_rad_per_us": w,
    }
    outputs.write_json(outdir / "single_step_summary.json", doc)
    print(outputs.dumps_fixed(doc))
    _check_assertions(doc, args.assert_, quiet=args.quiet)
    return EXIT_OK


def cmd_eit(args) -> int:
    outdir = _outdir(args)
    if args.config:
        cfg = _load_config(args)
        omega_c = cfg.omega_c
        gamma_e = 0.5 * cfg.gamma_e
        gamma_s = 0.5 * cfg.gamma_s_per_us + cfg.gamma_sg_per_us
        lambda_nm = cfg.species.lambda_photon_nm
        sigma_z = cfg.sigma_um[2]
        medium = EitMedium.gaussian(
            sigma_z=sigma_z, gamma_e=gamma_e, gamma_s=gamma_s,
            omega_c=omega_c, lambda_photon_nm=lambda_nm,
        )
    else:
        medium = EitMedium.gaussian()
    w_analytic = abs(medium.omega_c) ** 2 / medium.gamma_e
    scan = np.linspace(-6.0 * w_analytic, 6.0 * w_analytic, 1201)
    z_peak = medium.z_grid[int(np.argmax(medium.rho_of_z))]
    chi = susceptibility(medium, z_peak, scan)
    absorb = absorption_coefficient(medium, z_peak, scan)
    outputs.write_csv(
        outdir / "susceptibility.csv",
        "eit-susceptibility-v1",
        ["delta_p_rad_per_us", "re_chi", "im_chi", "absorption_per_um"],
        zip(scan, chi.real, chi.imag, absorb),
    )
    hwhm = transparency_hwhm(medium)

    # storage-retrieval polariton demo in the slow-light regime
    z = np.linspace(-200.0, 200.0, 4001)
    psi0 = np.exp(-0.5 * ((z + 60.0) / 12.0) ** 2).astype(complex)
    fld = PolaritonField(z_grid=z, psi=psi0)
    theta_hold = np.pi / 2
    theta_open = np.pi / 2 - 2.4e-4

    def theta_of_t(t, t_open=0.5, ramp=0.5):
        if t < t_open:
            return theta_hold
        frac = min(1.0, (t - t_open) / ramp)
        return theta_hold + (theta_open - theta_hold) * frac

    moved = polariton_propagate(fld, theta_of_t, t_final=3.0, dt=1e-4)
    outputs.write_csv(
        outdir / "polariton.csv",
        "eit-polariton-v1",
        ["z_um", "psi_abs2_initial", "psi_abs2_final"],
        zip(z, np.abs(psi0) ** 2, np.abs(moved.psi) ** 2),
    )
    doc = {
        "schema": "eit-v1",
        "transparency_hwhm_rad_per_us": hwhm,
        "transparency_hwhm_analytic": w_analytic,
        "mixing_angle_peak_rad": mixing_angle(
            medium.g, float(medium.rho_of_z.max()), medium.omega_c
        ),
        "polariton_norm_initial": fld.norm(),
        "polariton_norm_final": moved.norm(),
    }
    outputs.write_json(outdir / "eit_summary.json", doc)
    print(outputs.dumps_fixed(doc))
    _check_assertions(doc, args.assert_, quiet=args.quiet)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydsource",
        description="Single-photon-source simulator: ensemble preparation, "
        "photon emission, transparency checks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--threads", type=int, help="worker threads (or RYD_THREADS)")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="config override, dotted keys, repeatable",
    )
    common.add_argument(
        "--assert", dest="assert_", action="append", metavar="EXPR",
        help="post-run check like p_s_mean>=0.97, repeatable",
    )
    common.add_argument("--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("presets", parents=[common]).set_defaults(func=cmd_presets)

    p = sub.add_parser("budget", parents=[common])
    p.add_argument("--eta", type=float, default=0.6)
    p.add_argument("--n-atoms", type=int, default=1000)
    p.add_argument("--delta-theta-rad", type=float, default=0.07 * np.pi)
    p.add_argument("--p-i-prime", type=float, default=0.008)
    p.add_argument("--p-eg", type=float, default=0.1)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("lz-validate", parents=[common])
    p.add_argument("--d-bar-mhz", type=float, default=1.0)
    p.add_argument(
        "--alpha-mhz-per-us", type=float, action="append",
        help="sweep rate; repeatable (default: auto 10-point sweep)",
    )
    p.add_argument("--points", type=int, default=10)
    p.set_defaults(func=cmd_lz_validate)

    for name, fn in (("campaign", cmd_campaign), ("prepare", cmd_prepare)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--inclined-rad", type=float, default=None)
        p.add_argument("--flagged", type=int, default=1)
        p.set_defaults(func=fn)

    p = sub.add_parser("emit", parents=[common])
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--inclined-rad", type=float, default=None)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("single-step", parents=[common])
    p.add_argument("--realization", type=int, default=0)
    p.set_defaults(func=cmd_single_step)

    sub.add_parser("eit", parents=[common]).set_defaults(func=cmd_eit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._overrides = list(args.set or [])
    try:
        return args.func(args)
    except AssertionMiss as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ConfigError, CampaignError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
