from __future__ import annotations

import logging

import numpy as np

from ..fields import spectral
from ..fields.field import ComplexField
from ..fields.grid import SpatialGrid
from ..modulation.decompose import project_skew_orthogonal, rest_frame
from ..profile.family import check_guard, inverse_frame_transform, synthesize
from ..profile.types import RadialProfile
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def perturbation_shape(config: ExperimentConfig, grid: SpatialGrid, mu: float) -> np.ndarray:
    """Unscaled moving-frame perturbation for the configured mode."""
    mode = config.initial.perturbation
    if mode == "bump":
        center = config.initial.center(grid.dimension)
        width = config.initial.bump_width
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coordinates, center))
        return np.exp(-0.5 * r2 / width**2) + 0j
    if mode == "random":
        rng = np.random.default_rng(config.run.seed)
        noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        band = grid.k_squared <= 4.0 * mu
        values = spectral.inverse(spectral.forward(noise) * band)
        return values * np.exp(-0.5 * grid.radius**2 / 4.0)
    return np.zeros(grid.shape, dtype=complex)


def initial_field(
    config: ExperimentConfig, profile: RadialProfile, grid: SpatialGrid
) -> tuple[ComplexField, ComplexField]:
    """ψ₀ = S_σ₀(η + q) with q skew-orthogonal to the frame and ||q||_{H¹} = ε₀.

    Returns ψ₀ and the moving-frame perturbation q.
    """
    sigma0 = config.sigma0()
    eps0 = config.initial.eps0
    q = np.zeros(grid.shape, dtype=complex)
    if eps0 > 0 and config.initial.perturbation != "none":
        frame = rest_frame(profile, grid)
        projected = project_skew_orthogonal(perturbation_shape(config, grid, profile.mu), frame)
        norm = np.sqrt(spectral.h1_squared(projected, grid))
        if norm == 0:
            raise ValueError("perturbation vanishes after projection")
        q = projected * (eps0 / norm)
    if not np.any(q):
        return synthesize(profile, sigma0, grid), ComplexField(grid, q)
    check_guard(profile, sigma0, grid)
    eta = profile.evaluate(grid.radius)
    psi0 = inverse_frame_transform(ComplexField(grid, eta + q), sigma0)
    logger.info(
        "Initial data: %s perturbation, ||q||_H1=%.3e", config.initial.perturbation, eps0
    )
    return psi0, ComplexField(grid, q)


def initial_distance(psi0: ComplexField, profile: RadialProfile, config: ExperimentConfig) -> float:
    """||e^{-i½v₀·x}(ψ₀ - η_σ₀)||_{H¹}."""
    grid = psi0.grid
    sigma0 = config.sigma0()
    difference = psi0.values - synthesize(profile, sigma0, grid).values
    phase = np.exp(-0.5j * sum(v * x for v, x in zip(sigma0.v, grid.coordinates)))
    return float(np.sqrt(spectral.h1_squared(phase * difference, grid)))
