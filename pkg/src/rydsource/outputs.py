"""Deterministic result serialization.

All numeric output is written in fixed-precision scientific notation with
17 significant digits so reruns and worker-count changes diff cleanly.
CSV files carry a ``# schema: <name>`` first line; JSON files embed a
``schema`` key.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_FLOAT_FMT = "{:.16e}"
_PREFIX = "~~float:"
_SUFFIX = ":float~~"


def fmt_float(x) -> str:
    return _FLOAT_FMT.format(float(x))


def _convert(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        return _PREFIX + fmt_float(x) + _SUFFIX
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _convert(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [_convert(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_convert(v) for v in obj]
    return obj


def dumps_fixed(obj, indent: int = 2) -> str:
    """JSON text with every float rendered as a 17-significant-digit literal."""
    text = json.dumps(_convert(obj), indent=indent, sort_keys=True)
    return text.replace('"' + _PREFIX, "").replace(_SUFFIX + '"', "")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_fixed(obj) + "\n")


def write_csv(path, schema: str, header, rows) -> None:
    """Write rows (iterables of numbers/strings) with a schema comment line."""
    lines = [f"# schema: {schema}", ",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (bool, int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(fmt_float(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory_csv(path, traj) -> None:
    write_csv(
        path,
        "trajectory-v1",
        ["t_us", "P_G", "P_S", "norm_lost"],
        zip(traj.times, traj.p_g, traj.p_s, traj.norm_lost),
    )


def write_cut_csv(path, theta, p) -> None:
    write_csv(path, "angular-cut-v1", ["theta_rad", "p_per_sr"], zip(theta, p))


def write_sphere_csv(path, grid, p_per_sr) -> None:
    dirs = grid.directions
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * np.pi)
    write_csv(
        path,
        "angular-sphere-v1",
        ["theta_rad", "phi_rad", "weight_sr", "p_per_sr"],
        zip(theta, phi, grid.weights, p_per_sr),
    )


def write_spectrum_csv(path, freqs, density) -> None:
    write_csv(
        path,
        "spectrum-v1",
        ["detuning_rad_per_us", "p_per_rad_per_us"],
        zip(freqs, density),
    )


def write_spinwave_hist_csv(path, hists) -> None:
    """hists: dict axis -> (edges, density)."""
    rows = []
    for axis in ("x", "y", "z"):
        edges, density = hists[axis]
        centers = 0.5 * (np.asarray(edges)[:-1] + np.asarray(edges)[1:])
        for c, d in zip(centers, density):
            rows.append((axis, c, d))
    write_csv(
        path,
        "spinwave-hist-v1",
        ["axis", "bin_center_um", "density_per_um"],
        rows,
    )
