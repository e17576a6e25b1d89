"""Point-particle flow of a soliton in a slowly varying potential.

    ȧ = v,   v̇ = -2∇V(a),   γ̇ = μ + |v|²/4 - V(a),   μ̇ = 0

The particle has mass ½, so v²/4 + V(a) is conserved.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..model.potential import PotentialSpec
from ..profile.types import SolitonParams

logger = logging.getLogger(__name__)

STEP_SCALE = 0.01


def _rhs(state: np.ndarray, potential: PotentialSpec, mu: float, d: int) -> np.ndarray:
    a, v = state[:d], state[d : 2 * d]
    return np.concatenate(
        [v, -2.0 * potential.gradient_at(a), [mu + 0.25 * float(v @ v) - potential.at(a)]]
    )


def _rk4(state: np.ndarray, h: float, potential: PotentialSpec, mu: float, d: int) -> np.ndarray:
    k1 = _rhs(state, potential, mu, d)
    k2 = _rhs(state + 0.5 * h * k1, potential, mu, d)
    k3 = _rhs(state + 0.5 * h * k2, potential, mu, d)
    k4 = _rhs(state + h * k3, potential, mu, d)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def particle_energy(sigma: SolitonParams, potential: PotentialSpec) -> float:
    v = sigma.velocity
    return 0.25 * float(v @ v) + potential.at(sigma.a)


@dataclass
class EffectiveTrajectory:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    phases: np.ndarray
    mu: float
    dt: float
    substeps: int
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def energy_drift(self) -> float:
        if self.energies.size == 0:
            return 0.0
        return float(np.max(np.abs(self.energies - self.energies[0])))

    def sigma_at(self, index: int) -> SolitonParams:
        return SolitonParams(
            a=tuple(self.positions[index]),
            v=tuple(self.velocities[index]),
            gamma=float(self.phases[index]),
            mu=self.mu,
        )

    def final(self) -> SolitonParams:
        return self.sigma_at(-1)

    def describe(self) -> dict[str, Any]:
        return {
            "t_end": float(self.times[-1]),
            "samples": int(self.times.size),
            "dt": self.dt,
            "substeps": self.substeps,
            "mu": self.mu,
            "energy_drift": self.energy_drift,
        }

    def to_csv(self, path: str | Path) -> Path:
        d = self.dimension
        target = Path(path)
        with target.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["t", *(f"a{i}" for i in range(d)), *(f"v{i}" for i in range(d)), "gamma", "mu"]
            )
            for t, a, v, g in zip(self.times, self.positions, self.velocities, self.phases):
                row = [t, *a, *v, g, self.mu]
                writer.writerow([f"{float(x):.17g}" for x in row])
        return target


def newton_flow(
    sigma0: SolitonParams,
    potential: Optional[PotentialSpec],
    t_end: float,
    dt: float,
) -> EffectiveTrajectory:
    """Integrate the effective flow with classic RK4 and sample every ``dt``.

    Each sample interval is subdivided so that the step never exceeds
    0.01/ε_V. Negative ``t_end`` integrates backwards.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = sigma0.dimension
    potential = potential or PotentialSpec.zero(d, sigma0.mu)
    substeps = 1
    if potential.eps_v > 0:
        substeps = max(1, math.ceil(dt * potential.eps_v / STEP_SCALE))
    samples = int(round(abs(t_end) / dt))
    direction = 1.0 if t_end >= 0 else -1.0
    h = direction * dt / substeps

    state = np.concatenate([sigma0.position, sigma0.velocity, [sigma0.gamma]])
    history = [state]
    for _ in range(samples):
        for _ in range(substeps):
            state = _rk4(state, h, potential, sigma0.mu, d)
        history.append(state)
    table = np.array(history)
    times = direction * dt * np.arange(samples + 1)
    energies = 0.25 * np.sum(table[:, d : 2 * d] ** 2, axis=1) + np.array(
        [potential.at(row[:d]) for row in table]
    )
    trajectory = EffectiveTrajectory(
        times=times,
        positions=table[:, :d],
        velocities=table[:, d : 2 * d],
        phases=table[:, 2 * d],
        mu=sigma0.mu,
        dt=dt,
        substeps=substeps,
        energies=energies,
    )
    logger.info(
        "Newton flow to t=%g: %d samples, energy drift %.3e",
        t_end,
        samples,
        trajectory.energy_drift,
    )
    return trajectory
