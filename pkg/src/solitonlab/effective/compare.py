from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..core.exceptions import WindowMismatchError
from ..model.potential import PotentialSpec
from ..modulation.records import ModulationState
from .newton import EffectiveTrajectory

SCHEMA_VERSION = 1
WINDOW_SLACK = 1e-9


@dataclass(frozen=True)
class DeviationReport:
    """Sup-norm deviations of the tracked parameters from the effective flow."""

    window: tuple[float, float]
    samples: int
    position: float
    velocity: float
    phase: float
    phase_wrapped: float
    frequency: float
    checkpoint: Optional[float] = None
    position_checkpoint: Optional[float] = None
    frequency_checkpoint: Optional[float] = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "window": list(self.window),
            "samples": self.samples,
            "position": self.position,
            "velocity": self.velocity,
            "phase": self.phase,
            "phase_wrapped": self.phase_wrapped,
            "frequency": self.frequency,
            "checkpoint": self.checkpoint,
            "position_checkpoint": self.position_checkpoint,
            "frequency_checkpoint": self.frequency_checkpoint,
        }

    def to_text(self) -> str:
        lines = [
            f"window        [{self.window[0]:.6g}, {self.window[1]:.6g}] ({self.samples} samples)",
            f"sup|a - a_N|  {self.position:.17g}",
            f"sup|v - v_N|  {self.velocity:.17g}",
            f"sup|g - g_N|  {self.phase:.17g} (mod 2pi {self.phase_wrapped:.17g})",
            f"sup|mu - mu0| {self.frequency:.17g}",
        ]
        if self.checkpoint is not None:
            lines.append(
                f"at t={self.checkpoint:.6g}: |a - a_N| {self.position_checkpoint:.17g}, "
                f"|mu - mu0| {self.frequency_checkpoint:.17g}"
            )
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.write_text(self.to_text(), encoding="utf-8")
        return target


def _spline(times: np.ndarray, values: np.ndarray, slopes: np.ndarray) -> CubicHermiteSpline:
    order = np.argsort(times)
    return CubicHermiteSpline(times[order], values[order], slopes[order], axis=0)


def _wrapped(delta: np.ndarray) -> np.ndarray:
    return np.abs((delta + math.pi) % (2.0 * math.pi) - math.pi)


def compare_trajectories(
    tracked: Sequence[ModulationState],
    effective: EffectiveTrajectory,
    potential: Optional[PotentialSpec] = None,
    *,
    checkpoint: Optional[float] = None,
) -> DeviationReport:
    """Interpolate the effective flow to the tracked times and take sup deviations.

    Hermite interpolation uses the flow's own vector field as slopes, so it
    stays fourth-order accurate between samples.
    """
    if not tracked:
        raise WindowMismatchError("no tracked samples to compare")
    times = np.array([state.time for state in tracked])
    lower, upper = float(np.min(effective.times)), float(np.max(effective.times))
    if times.min() < lower - WINDOW_SLACK or times.max() > upper + WINDOW_SLACK:
        raise WindowMismatchError(
            f"tracked window [{times.min():.6g}, {times.max():.6g}] exceeds "
            f"effective window [{lower:.6g}, {upper:.6g}]"
        )
    if tracked[0].sigma.dimension != effective.dimension:
        raise WindowMismatchError("tracked and effective trajectories differ in dimension")
    d = effective.dimension
    potential = potential or PotentialSpec.zero(d, effective.mu)
    forces = np.array([-2.0 * potential.gradient_at(a) for a in effective.positions])
    values = np.array([potential.at(a) for a in effective.positions])
    phase_rate = effective.mu + 0.25 * np.sum(effective.velocities**2, axis=1) - values
    clipped = np.clip(times, lower, upper)
    positions = _spline(effective.times, effective.positions, effective.velocities)(clipped)
    velocities = _spline(effective.times, effective.velocities, forces)(clipped)
    phases = _spline(effective.times, effective.phases, phase_rate)(clipped)

    a = np.array([state.sigma.position for state in tracked])
    v = np.array([state.sigma.velocity for state in tracked])
    gamma = np.array([state.sigma.gamma for state in tracked])
    mu = np.array([state.sigma.mu for state in tracked])
    position_error = np.linalg.norm(a - positions, axis=1)
    frequency_error = np.abs(mu - effective.mu)

    at_checkpoint: tuple[Optional[float], Optional[float]] = (None, None)
    if checkpoint is not None:
        index = int(np.argmin(np.abs(times - checkpoint)))
        at_checkpoint = (float(np.max(position_error[: index + 1])), float(frequency_error[index]))
    return DeviationReport(
        window=(float(times.min()), float(times.max())),
        samples=int(times.size),
        position=float(np.max(position_error)),
        velocity=float(np.max(np.linalg.norm(v - velocities, axis=1))),
        phase=float(np.max(np.abs(gamma - phases))),
        phase_wrapped=float(np.max(_wrapped(gamma - phases))),
        frequency=float(np.max(frequency_error)),
        checkpoint=checkpoint,
        position_checkpoint=at_checkpoint[0],
        frequency_checkpoint=at_checkpoint[1],
    )
