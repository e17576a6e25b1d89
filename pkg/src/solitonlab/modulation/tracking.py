"""Follow σ(t) along an evolution and form the modulation residuals α.

With centred differences of the tracked parameters,

    α_t = ȧ - v                          α_b = -½v̇ - ∇V(a)
    α_g = μ - |v|²/4 + ½ȧ·v - V(a) - γ̇   α_s = -μ̇

all of which vanish identically on the free soliton flow.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Iterable, Optional

import numpy as np

from ..core.exceptions import NumericalError
from ..fields import spectral
from ..fields.field import ComplexField
from ..model.potential import PotentialSpec
from ..profile.cache import ProfileCache
from ..profile.types import SolitonParams
from .decompose import decompose, predict
from .records import AlphaRecord, ModulationState, TrackingResult

logger = logging.getLogger(__name__)


def _unwrap_towards(gamma: float, reference: float) -> float:
    turns = round((reference - gamma) / (2.0 * math.pi))
    return gamma + 2.0 * math.pi * turns


class Tracker:
    """Evolution observer that decomposes every sample, warm-started from the last one."""

    def __init__(
        self,
        sigma0: SolitonParams,
        cache: ProfileCache,
        potential: Optional[PotentialSpec] = None,
        **decompose_options: float,
    ) -> None:
        self.cache = cache
        self.potential = potential
        self.options = decompose_options
        self._guess = sigma0
        self._last_time: Optional[float] = None
        self.states: list[ModulationState] = []

    def _potential_at(self, sigma: SolitonParams) -> float:
        return self.potential.at(sigma.a) if self.potential is not None else 0.0

    def __call__(self, time: float, psi: ComplexField) -> None:
        guess = self._guess
        if self._last_time is not None:
            guess = predict(guess, time - self._last_time, self._potential_at(guess))
        try:
            state = decompose(psi, guess, self.cache, time=time, **self.options)  # type: ignore[arg-type]
        except NumericalError:
            logger.warning("Decomposition failed at t=%g", time)
            raise
        sigma = state.sigma
        gamma = _unwrap_towards(sigma.gamma, guess.gamma)
        if gamma != sigma.gamma:
            state = dataclasses.replace(state, sigma=sigma.replace(gamma=gamma))
        self.states.append(state)
        self._guess = state.sigma
        self._last_time = time

    def alphas(self) -> list[AlphaRecord]:
        return alpha_records(self.states, self.cache, self.potential)

    def result(self) -> TrackingResult:
        return TrackingResult(states=list(self.states), alphas=self.alphas())


def alpha_records(
    states: list[ModulationState],
    cache: ProfileCache,
    potential: Optional[PotentialSpec] = None,
) -> list[AlphaRecord]:
    if len(states) < 3:
        return []
    grid = states[0].w.grid
    records = []
    for before, current, after in zip(states, states[1:], states[2:]):
        span = after.time - before.time
        rate = (after.sigma.as_vector() - before.sigma.as_vector()) / span
        records.append(_alpha(current, rate, cache, potential, grid.dimension))
    return records


def _alpha(
    state: ModulationState,
    rate: np.ndarray,
    cache: ProfileCache,
    potential: Optional[PotentialSpec],
    d: int,
) -> AlphaRecord:
    sigma = state.sigma
    a_dot, v_dot, gamma_dot, mu_dot = rate[:d], rate[d : 2 * d], rate[2 * d], rate[2 * d + 1]
    v = sigma.velocity
    if potential is not None:
        value, slope = potential.at(sigma.a), potential.gradient_at(sigma.a)
        grid = state.w.grid
        eta = cache.profile(sigma.mu).evaluate(grid.radius)
        remainder = potential.remainder_values(grid, sigma.a) * (eta + state.w.values)
        r_v_norm = float(np.sqrt(spectral.l2_squared(remainder, grid)))
    else:
        value, slope, r_v_norm = 0.0, np.zeros(d), 0.0
    alpha = np.concatenate(
        [
            a_dot - v,
            -0.5 * v_dot - slope,
            [sigma.mu - 0.25 * float(v @ v) + 0.5 * float(a_dot @ v) - value - gamma_dot],
            [-mu_dot],
        ]
    )
    return AlphaRecord(
        time=state.time,
        alpha=tuple(float(x) for x in alpha),
        rate=tuple(float(x) for x in rate),
        r_v_norm=r_v_norm,
    )


def track(
    samples: Iterable[tuple[float, ComplexField]],
    sigma0: SolitonParams,
    cache: ProfileCache,
    potential: Optional[PotentialSpec] = None,
) -> TrackingResult:
    """Decompose a sequence of (t, ψ) samples and compute α at the interior ones."""
    tracker = Tracker(sigma0, cache, potential)
    for time, psi in samples:
        tracker(time, psi)
    return tracker.result()
