"""Skew-orthogonal decomposition ψ = S_σ(η_μ + w) with ω(w, ẑ_j(μ)) = 0.

The constraints are solved by damped Newton iteration in generator
coordinates δ = (δ_t, δ_b, δ_g, δ_s), applied as

    a += δ_t,  v += 2δ_b,  γ += ½v·δ_t + δ_g,  μ += δ_s,

so that u = S_σ⁻¹ψ moves along -K_k u for the generators K_t = -∇,
K_b = ix, K_g = i. At w = 0 the Jacobian is the symplectic matrix Ω.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import metrics as core_metrics
from ..core.exceptions import DecompositionError
from ..fields import spectral
from ..fields.field import ComplexField
from ..fields.grid import SpatialGrid
from ..profile.cache import ProfileCache
from ..profile.family import TangentFrame, frame_transform, inverse_frame_transform, synthesize, tangent_frame
from ..profile.types import RadialProfile, SolitonParams
from .records import ModulationState

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 50
MAX_HALVINGS = 5
TOLERANCE = 1e-10
TRUST_FACTOR = 0.3


@dataclass(frozen=True, eq=False)
class _Evaluation:
    sigma: SolitonParams
    profile: RadialProfile
    frame: TangentFrame
    u: np.ndarray
    eta: np.ndarray
    w: np.ndarray
    constraints: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.constraints)))


def rest_frame(profile: RadialProfile, grid: SpatialGrid) -> TangentFrame:
    return tangent_frame(profile, SolitonParams.at_rest(profile.mu, grid.dimension), grid)


def frame_mu_derivatives(
    profile: RadialProfile, cache: ProfileCache, grid: SpatialGrid
) -> list[np.ndarray]:
    """∂_μ of the rest frame (t, b, g, s) at the profile's frequency."""
    radius = grid.radius
    mu_slope = profile.evaluate_mu_slope(radius)
    eta_mu = profile.evaluate_mu(radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = [np.where(radius > 0, x / radius, 0.0) for x in grid.coordinates]
    translations = [-(mu_slope * u) + 0j for u in unit]
    boosts = [1j * x * eta_mu for x in grid.coordinates]
    second = cache.second_mu_derivative(profile.mu, radius) + 0j
    return [*translations, *boosts, 1j * eta_mu, second]


def _evaluate(psi: ComplexField, sigma: SolitonParams, cache: ProfileCache) -> _Evaluation:
    grid = psi.grid
    profile = cache.profile(sigma.mu)
    frame = rest_frame(profile, grid)
    u = frame_transform(psi, sigma).values
    eta = profile.evaluate(grid.radius)
    w = u - eta
    constraints = np.array([spectral.symplectic_values(w, z.values, grid) for z in frame.fields])
    return _Evaluation(sigma, profile, frame, u, eta, w, constraints)


def _jacobian(evaluation: _Evaluation, cache: ProfileCache) -> np.ndarray:
    grid = evaluation.frame.grid
    d = grid.dimension
    u, w = evaluation.u, evaluation.w
    fields = [z.values for z in evaluation.frame.fields]
    moves = [
        *(-spectral.derivative_values(u, grid, axis, 1) for axis in range(d)),
        *(1j * x * u for x in grid.coordinates),
        1j * u,
    ]
    size = 2 * d + 2
    jacobian = np.zeros((size, size))
    for k, move in enumerate(moves):
        for j, z in enumerate(fields):
            jacobian[j, k] = -spectral.symplectic_values(move, z, grid)
    mu_frame = frame_mu_derivatives(evaluation.profile, cache, grid)
    scaling = fields[-1]
    for j, (z, dz) in enumerate(zip(fields, mu_frame)):
        jacobian[j, -1] = -spectral.symplectic_values(scaling, z, grid) + spectral.symplectic_values(
            w, dz, grid
        )
    return jacobian


def apply_step(sigma: SolitonParams, step: np.ndarray) -> SolitonParams:
    d = sigma.dimension
    shift, boost, phase, scale = step[:d], step[d : 2 * d], step[2 * d], step[2 * d + 1]
    velocity = sigma.velocity
    return SolitonParams(
        a=tuple(sigma.position + shift),
        v=tuple(velocity + 2.0 * boost),
        gamma=sigma.gamma + 0.5 * float(velocity @ shift) + phase,
        mu=sigma.mu + scale,
    )


def decompose(
    psi: ComplexField,
    sigma_guess: SolitonParams,
    cache: ProfileCache,
    *,
    time: float = 0.0,
    max_iterations: int = MAX_ITERATIONS,
    tolerance: float = TOLERANCE,
    trust_factor: float = TRUST_FACTOR,
) -> ModulationState:
    grid = psi.grid
    guess_profile = cache.profile(sigma_guess.mu)
    eta_guess = synthesize(guess_profile, sigma_guess, grid)
    eta_h1 = np.sqrt(spectral.h1_squared(eta_guess.values, grid))
    distance = np.sqrt(spectral.h1_squared(psi.values - eta_guess.values, grid))
    if distance >= trust_factor * eta_h1:
        raise DecompositionError(
            f"field is {distance:.3e} from the guess, outside the trust radius {trust_factor * eta_h1:.3e}",
            time=time,
        )

    evaluation = _evaluate(psi, sigma_guess, cache)
    threshold = tolerance * np.sqrt(spectral.l2_squared(evaluation.eta, grid))
    history = [evaluation.residual]
    iteration = 0
    while evaluation.residual >= threshold:
        if iteration == max_iterations:
            raise DecompositionError(history=history, time=time)
        iteration += 1
        step = -np.linalg.solve(_jacobian(evaluation, cache), evaluation.constraints)
        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = _evaluate(psi, apply_step(evaluation.sigma, scale * step), cache)
            if trial.residual < evaluation.residual:
                break
            scale *= 0.5
        else:
            raise DecompositionError("Newton step halving exhausted", history=history, time=time)
        evaluation = trial
        history.append(evaluation.residual)
        logger.debug("Decompose t=%g iteration %d: residual %.3e", time, iteration, evaluation.residual)

    core_metrics.record_newton_iterations(iteration)
    w = evaluation.w
    return ModulationState(
        time=time,
        sigma=evaluation.sigma,
        w=ComplexField(grid, w),
        w_l2=float(np.sqrt(spectral.l2_squared(w, grid))),
        w_h1=float(np.sqrt(spectral.h1_squared(w, grid))),
        iterations=iteration,
        constraint_residual=evaluation.residual,
        history=tuple(history),
    )


def resynthesize(state: ModulationState, cache: ProfileCache) -> ComplexField:
    """S_σ(η_μ + w) on the state's grid."""
    grid = state.w.grid
    eta = cache.profile(state.sigma.mu).evaluate(grid.radius)
    return inverse_frame_transform(ComplexField(grid, eta + state.w.values), state.sigma)


def skew_orthogonality(state: ModulationState, cache: ProfileCache) -> float:
    """max_j |ω(w, ẑ_j)| against the rest frame at the state's μ."""
    frame = rest_frame(cache.profile(state.sigma.mu), state.w.grid)
    return max(abs(spectral.symplectic_values(state.w.values, z.values, frame.grid)) for z in frame)


def predict(sigma: SolitonParams, elapsed: float, potential_value: float = 0.0) -> SolitonParams:
    """Free-flight extrapolation used to warm-start the next decomposition."""
    v = sigma.velocity
    return sigma.replace(
        a=tuple(sigma.position + v * elapsed),
        gamma=sigma.gamma + (sigma.mu + 0.25 * float(v @ v) - potential_value) * elapsed,
    )


def project_skew_orthogonal(
    values: np.ndarray, frame: TangentFrame, form_inverse: Optional[np.ndarray] = None
) -> np.ndarray:
    """Remove the tangent components so that ω(p, z_j) = 0 for every frame vector.

    Solves Σ_k c_k ω(z_k, z_j) = ω(p, z_j) and returns p - Σ c_k z_k.
    """
    grid = frame.grid
    fields = [z.values for z in frame.fields]
    size = len(fields)
    omega = np.array(
        [[spectral.symplectic_values(fields[k], fields[j], grid) for k in range(size)] for j in range(size)]
    )
    rhs = np.array([spectral.symplectic_values(values, z, grid) for z in fields])
    coefficients = np.linalg.solve(omega, rhs) if form_inverse is None else form_inverse.T @ rhs
    return values - sum(c * z for c, z in zip(coefficients, fields))
