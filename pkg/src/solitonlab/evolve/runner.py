from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from ..core import metrics as core_metrics
from ..core.exceptions import GuardViolationError, IntegratorAccuracyError, SolitonLabError
from ..fields.field import ComplexField
from ..model import functionals as fn
from ..model.nonlinearity import Nonlinearity
from ..model.potential import PotentialSpec
from .stepper import EvolutionConfig, SplitStepper

logger = logging.getLogger(__name__)


class Observer(Protocol):
    def __call__(self, time: float, psi: ComplexField) -> None:
        ...


@dataclass(frozen=True)
class Moments:
    """Sampled observables of one field snapshot."""

    time: float
    step: int
    mass: float
    energy: float
    momentum: tuple[float, ...]
    force: tuple[float, ...]
    center: tuple[float, ...]


@dataclass
class Trajectory:
    config: EvolutionConfig
    moments: list[Moments] = field(default_factory=list)
    fields: list[ComplexField] = field(default_factory=list)
    final: Optional[ComplexField] = None
    status: str = "running"
    message: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([m.time for m in self.moments])

    @property
    def final_time(self) -> float:
        return self.moments[-1].time if self.moments else 0.0

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def drift(self, quantity: str) -> float:
        """Largest relative deviation of mass or energy from its initial value."""
        values = np.array([getattr(m, quantity) for m in self.moments])
        if values.size == 0:
            return 0.0
        scale = max(abs(values[0]), self.moments[0].mass if quantity == "energy" else 0.0, 1e-300)
        return float(np.max(np.abs(values - values[0])) / scale)


def measure(
    psi: ComplexField,
    time: float,
    step: int,
    spec: Nonlinearity,
    potential: Optional[PotentialSpec],
    potential_values: Optional[np.ndarray],
    gradient: Optional[tuple[np.ndarray, ...]],
) -> Moments:
    grid, values = psi.grid, psi.values
    force = (
        fn.potential_force_of(values, grid, gradient)
        if gradient is not None
        else np.zeros(grid.dimension)
    )
    return Moments(
        time=time,
        step=step,
        mass=fn.mass_of(values, grid),
        energy=fn.hamiltonian_of(values, grid, spec, potential_values),
        momentum=tuple(float(p) for p in fn.momentum_of(values, grid)),
        force=tuple(float(f) for f in force),
        center=tuple(float(c) for c in fn.center_of_mass(values, grid)),
    )


def _guard_ok(moments: Moments, margin: float, half_extent: float) -> bool:
    return all(abs(c) + margin <= half_extent for c in moments.center)


def evolve_run(
    psi0: ComplexField,
    config: EvolutionConfig,
    potential: Optional[PotentialSpec],
    spec: Nonlinearity,
    observers: Sequence[Observer | Callable[[float, ComplexField], None]] = (),
    *,
    keep_fields: bool = False,
) -> Trajectory:
    """Integrate from ψ₀ for ``config.steps`` steps, sampling every ``config.stride``.

    Guard and drift breaches raise with the partial trajectory attached as
    ``error.trajectory``.
    """
    grid = psi0.grid
    stepper = SplitStepper(grid, spec, potential, config.dt, dealias=config.dealias)
    potential_values = potential.values(grid) if potential is not None else None
    gradient = potential.gradient_values(grid) if potential is not None else None
    trajectory = Trajectory(config=config)

    def sample(values: np.ndarray, step: int) -> Moments:
        time = step * config.dt
        psi = ComplexField(grid, values)
        moments = measure(psi, time, step, spec, potential, potential_values, gradient)
        trajectory.moments.append(moments)
        trajectory.final = psi
        if keep_fields:
            trajectory.fields.append(psi)
        for observer in observers:
            observer(time, psi)
        return moments

    def fail(error: SolitonLabError) -> None:
        trajectory.status = "failed"
        trajectory.message = str(error)
        error.trajectory = trajectory  # type: ignore[attr-defined]
        logger.warning("Evolution stopped: %s", error)
        raise error

    values = psi0.values
    first = sample(values, 0)
    if not _guard_ok(first, config.guard_margin, grid.half_extent):
        fail(GuardViolationError(time=0.0))
    steps = config.steps
    logger.info("Evolving %d steps (dt=%g, stride=%d)", steps, config.dt, config.stride)
    for step in range(1, steps + 1):
        values = stepper.step(values)
        if step % config.stride and step != steps:
            continue
        core_metrics.record_integrator_steps(step - trajectory.moments[-1].step)
        moments = sample(values, step)
        if not _guard_ok(moments, config.guard_margin, grid.half_extent):
            fail(GuardViolationError(time=moments.time))
        mass_drift = abs(moments.mass - first.mass) / first.mass
        if mass_drift > config.mass_tolerance:
            fail(IntegratorAccuracyError(time=moments.time, quantity="mass", drift=mass_drift))
        energy_drift = abs(moments.energy - first.energy) / max(abs(first.energy), first.mass)
        if energy_drift > config.energy_tolerance:
            fail(IntegratorAccuracyError(time=moments.time, quantity="energy", drift=energy_drift))
    trajectory.status = "completed"
    logger.info(
        "Evolution completed at t=%g: mass drift %.2e, energy drift %.2e",
        trajectory.final_time,
        trajectory.drift("mass"),
        trajectory.drift("energy"),
    )
    return trajectory
