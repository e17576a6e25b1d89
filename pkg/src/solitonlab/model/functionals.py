from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..fields import spectral
from ..fields.field import ComplexField, same_grid
from ..fields.grid import SpatialGrid
from .nonlinearity import Nonlinearity
from .potential import PotentialSpec


@dataclass(frozen=True)
class Functionals:
    mass_N: float
    energy_HV: float
    energy_Emu: float
    F_val: float
    momentum: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Remainders:
    fprime_w: ComplexField
    N2: ComplexField
    R2: float
    R3: float


def density_of(values: np.ndarray) -> np.ndarray:
    return values.real**2 + values.imag**2


def mass_of(values: np.ndarray, grid: SpatialGrid) -> float:
    """N(ψ) = ½∫|ψ|²."""
    return 0.5 * spectral.l2_squared(values, grid)


def momentum_of(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """⟨ψ, -i∇ψ⟩ = Im∫conj(ψ)∇ψ."""
    return np.array(
        [spectral.pairing(derivative, values, grid).imag for derivative in spectral.gradient_values(values, grid)]
    )


def potential_force_of(
    values: np.ndarray, grid: SpatialGrid, gradient: tuple[np.ndarray, ...]
) -> np.ndarray:
    """∫(∇V)|ψ|², the right-hand side of the field-level Newton law."""
    density = density_of(values)
    return np.array([float(np.sum(g * density) * grid.cell_volume) for g in gradient])


def center_of_mass(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    density = density_of(values)
    total = float(density.sum())
    if total == 0:
        return np.zeros(grid.dimension)
    return np.array([float(np.sum(x * density)) / total for x in grid.coordinates])


def hamiltonian_of(
    values: np.ndarray,
    grid: SpatialGrid,
    spec: Nonlinearity,
    potential_values: Optional[np.ndarray],
) -> float:
    """H_V(ψ) = ½∫|∇ψ|² + ½∫V|ψ|² - F(ψ)."""
    density = density_of(values)
    kinetic = 0.5 * spectral.gradient_squared(values, grid)
    external = 0.0
    if potential_values is not None:
        external = 0.5 * float(np.sum(potential_values * density) * grid.cell_volume)
    return kinetic + external - spec.energy_density_integral(density, grid)


def lyapunov_energy_of(values: np.ndarray, grid: SpatialGrid, spec: Nonlinearity, mu: float) -> float:
    """E_μ(ψ) = ½∫|∇ψ|² + μN(ψ) - F(ψ)."""
    density = density_of(values)
    kinetic = 0.5 * spectral.gradient_squared(values, grid)
    return kinetic + mu * mass_of(values, grid) - spec.energy_density_integral(density, grid)


def functionals(
    spec: Nonlinearity,
    psi: ComplexField,
    potential: Optional[PotentialSpec],
    mu: float,
) -> Functionals:
    grid = psi.grid
    values = psi.values
    potential_values = potential.values(grid) if potential is not None else None
    return Functionals(
        mass_N=mass_of(values, grid),
        energy_HV=hamiltonian_of(values, grid, spec, potential_values),
        energy_Emu=lyapunov_energy_of(values, grid, spec, mu),
        F_val=spec.energy_density_integral(density_of(values), grid),
        momentum=tuple(float(p) for p in momentum_of(values, grid)),
    )


def nonlinear_remainders(spec: Nonlinearity, eta: ComplexField, w: ComplexField) -> Remainders:
    """Taylor remainders of f and F at a real base point η in direction w."""
    grid = same_grid(eta, w)
    if np.max(np.abs(eta.values.imag)) > 1e-12 * max(1.0, float(np.max(np.abs(eta.values)))):
        raise ValueError("nonlinear remainders require a real base profile")
    base = eta.values.real
    linear = spec.linearize(base, grid).apply(w.values)
    shifted = base + w.values
    remainder = spec.apply(shifted, grid) - spec.apply(base.astype(complex), grid) - linear

    def potential_energy(values: np.ndarray) -> float:
        return spec.energy_density_integral(density_of(values), grid)

    f_base = spec.apply(base, grid)
    r2 = (
        potential_energy(shifted)
        - potential_energy(base)
        - spectral.real_inner_values(f_base.astype(complex), w.values, grid)
    )
    r3 = r2 - 0.5 * spectral.real_inner_values(linear, w.values, grid)
    return Remainders(
        fprime_w=ComplexField(grid, linear),
        N2=ComplexField(grid, remainder),
        R2=float(r2),
        R3=float(r3),
    )
