"""Driving pulse schedules: Rabi envelope and chirped two-photon detuning.

The default preparation drive ramps the Rabi frequency up with a sin^2
edge, holds a plateau, and ramps down, while the two-photon detuning is
swept linearly across resonance during the plateau and clamped outside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import mhz_to_rad_per_us


@dataclass(frozen=True)
class PulseSchedule:
    """Time-dependent drive: Omega(t) envelope and linear detuning chirp.

    All rates in rad/us, times in us.  Omega(t) is a sin^2 ramp of duration
    ``ramp_us`` up to ``omega_max``, flat until ``plateau_end_us``, then a
    sin^2 ramp back to zero at ``t_final_us``.  delta(t) sweeps linearly
    from ``delta_start`` to ``delta_end`` over the plateau and is clamped
    to the end values outside it.
    """

    omega_max: float
    ramp_us: float
    plateau_end_us: float
    t_final_us: float
    delta_start: float
    delta_end: float

    def __post_init__(self):
        if not (0 < self.ramp_us <= self.plateau_end_us <= self.t_final_us):
            raise ValueError("require 0 < ramp_us <= plateau_end_us <= t_final_us")
        if self.omega_max < 0:
            raise ValueError("omega_max must be non-negative")

    def omega(self, t):
        """Rabi envelope at time(s) t, rad/us."""
        t = np.asarray(t, dtype=float)
        up = np.sin(0.5 * np.pi * np.clip(t / self.ramp_us, 0.0, 1.0)) ** 2
        tail = self.t_final_us - t
        down_ramp = self.t_final_us - self.plateau_end_us
        if down_ramp > 0:
            down = np.sin(0.5 * np.pi * np.clip(tail / down_ramp, 0.0, 1.0)) ** 2
        else:
            down = np.where(tail >= 0, 1.0, 0.0)
        out = self.omega_max * np.minimum(up, down)
        out = np.where((t < 0) | (t > self.t_final_us), 0.0, out)
        return out if out.ndim else float(out)

    def delta(self, t):
        """Two-photon detuning at time(s) t, rad/us (clamped linear chirp)."""
        t = np.asarray(t, dtype=float)
        frac = np.clip(
            (t - self.ramp_us) / (self.plateau_end_us - self.ramp_us), 0.0, 1.0
        )
        out = self.delta_start + (self.delta_end - self.delta_start) * frac
        return out if out.ndim else float(out)

    @property
    def chirp_rate(self) -> float:
        """Linear sweep rate alpha = d(delta)/dt over the chirp window, rad/us^2."""
        return (self.delta_end - self.delta_start) / (
            self.plateau_end_us - self.ramp_us
        )

    def is_adiabatic(self, d_bar: float) -> bool:
        """Whether the sweep is slower than the collective coupling squared."""
        return abs(self.chirp_rate) < d_bar**2

    def reversed(self) -> "PulseSchedule":
        """Time-reversed schedule (envelope mirrored, chirp sign flipped)."""
        return PulseSchedule(
            omega_max=self.omega_max,
            ramp_us=self.t_final_us - self.plateau_end_us
            if self.t_final_us > self.plateau_end_us
            else self.ramp_us,
            plateau_end_us=self.t_final_us - self.ramp_us,
            t_final_us=self.t_final_us,
            delta_start=self.delta_end,
            delta_end=self.delta_start,
        )


@dataclass(frozen=True)
class ConstantSchedule:
    """Constant drive, mainly for oracle comparisons and single-step mode."""

    omega_const: float
    delta_const: float = 0.0
    t_final_us: float = np.inf

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.omega_const, dtype=float)
        return out if out.ndim else float(out)

    def delta(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.delta_const, dtype=float)
        return out if out.ndim else float(out)


def fig2_schedule(omega_max: float = mhz_to_rad_per_us(10.0)) -> PulseSchedule:
    """Default preparation drive used for the headline ensemble runs."""
    return PulseSchedule(
        omega_max=omega_max,
        ramp_us=0.3,
        plateau_end_us=1.2,
        t_final_us=1.5,
        delta_start=-mhz_to_rad_per_us(30.0),
        delta_end=mhz_to_rad_per_us(30.0),
    )
