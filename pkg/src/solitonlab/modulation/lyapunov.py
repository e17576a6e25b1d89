from __future__ import annotations

from typing import Optional

import numpy as np

from ..fields import spectral
from ..fields.field import ComplexField
from ..model.functionals import lyapunov_energy_of, nonlinear_remainders
from ..model.nonlinearity import Nonlinearity
from ..profile.cache import ProfileCache
from .records import LyapunovRecord, ModulationState, TrackingResult

SAFE_REGION = 0.05
LOWER_BOUND_FACTOR = 0.25


def lyapunov_gap(
    state: ModulationState,
    spec: Nonlinearity,
    cache: ProfileCache,
    rho: Optional[float] = None,
) -> LyapunovRecord:
    """ΔE = E_μ(η + w) - E_μ(η) in the moving frame.

    The coercive lower bound ΔE ≥ ¼ρ||w||²_{H¹} is only judged for
    ||w||_{H¹} ≤ 0.05, where the cubic remainder cannot dominate.
    """
    grid = state.w.grid
    mu = state.sigma.mu
    eta = cache.profile(mu).evaluate(grid.radius) + 0j
    w = state.w.values
    delta_e = lyapunov_energy_of(eta + w, grid, spec, mu) - lyapunov_energy_of(eta, grid, spec, mu)
    remainders = nonlinear_remainders(spec, ComplexField(grid, eta), state.w)
    quadratic = 0.5 * (spectral.gradient_squared(w, grid) + mu * spectral.l2_squared(w, grid)) - remainders.R2
    lower_bound_ok: Optional[bool] = None
    if rho is not None and state.w_h1 <= SAFE_REGION:
        lower_bound_ok = bool(delta_e >= LOWER_BOUND_FACTOR * rho * state.w_h1**2)
    return LyapunovRecord(
        time=state.time,
        delta_e=float(delta_e),
        quadratic_estimate=float(quadratic),
        w_h1=state.w_h1,
        lower_bound_ok=lower_bound_ok,
        rho_used=rho,
    )


def attach_lyapunov(
    result: TrackingResult, spec: Nonlinearity, cache: ProfileCache, rho: Optional[float] = None
) -> TrackingResult:
    result.lyapunov = [lyapunov_gap(state, spec, cache, rho) for state in result.states]
    return result


def energy_drift(records: list[LyapunovRecord]) -> float:
    """sup_t |ΔE(t) - ΔE(0)|."""
    if not records:
        return 0.0
    values = np.array([r.delta_e for r in records])
    return float(np.max(np.abs(values - values[0])))
