"""Conservation and Ehrenfest diagnostics over a sampled trajectory.

The Ehrenfest residual is dP/dt + ∫(∇V)|ψ|² with P = Im∫conj(ψ)∇ψ, the
derivative taken by centred differences between neighbouring samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Optional

import numpy as np
from scipy.integrate import trapezoid

from ..model.potential import PotentialSpec
from .runner import Trajectory

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ConservationRecord:
    time: float
    mass: float
    energy: float
    momentum: tuple[float, ...]
    ehrenfest: tuple[float, ...]
    ehrenfest_relative: float

    def as_row(self) -> dict[str, Any]:
        return {
            "kind": "conservation",
            "schema_version": SCHEMA_VERSION,
            "t": self.time,
            "N": self.mass,
            "H_V": self.energy,
            "momentum": list(self.momentum),
            "ehrenfest": list(self.ehrenfest),
            "ehrenfest_relative": self.ehrenfest_relative,
        }


def ehrenfest_scale(potential: Optional[PotentialSpec], mass: float) -> float:
    """sup|∇V|·N, or 1 when the potential exerts no force."""
    if potential is None:
        return 1.0
    gradient = potential.sup_gradient()
    return gradient * mass if gradient > 0 else 1.0


def invariant_monitor(
    trajectory: Trajectory, potential: Optional[PotentialSpec] = None
) -> Iterator[ConservationRecord]:
    """Records for the interior samples, where a centred difference exists."""
    moments = trajectory.moments
    if len(moments) < 3:
        raise ValueError("Ehrenfest residual needs at least three samples")
    scale = ehrenfest_scale(potential, moments[0].mass)
    for before, current, after in zip(moments, moments[1:], moments[2:]):
        span = after.time - before.time
        rate = (np.asarray(after.momentum) - np.asarray(before.momentum)) / span
        residual = rate + np.asarray(current.force)
        yield ConservationRecord(
            time=current.time,
            mass=current.mass,
            energy=current.energy,
            momentum=current.momentum,
            ehrenfest=tuple(float(r) for r in residual),
            ehrenfest_relative=float(np.max(np.abs(residual)) / scale),
        )


def integrated_ehrenfest(records: list[ConservationRecord]) -> float:
    """Time average of the relative Ehrenfest residual."""
    if len(records) < 2:
        return records[0].ehrenfest_relative if records else 0.0
    times = np.array([r.time for r in records])
    values = np.array([r.ehrenfest_relative for r in records])
    return float(trapezoid(values, times) / (times[-1] - times[0]))
