"""Fourier-multiplier calculus and quadrature on periodic grids.

Array-level helpers (``*_values``) work on raw ndarrays and are what the hot
loops call; the field-level functions wrap them with grid checks.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import fft as sfft

from ..core.exceptions import NumericalError
from .field import ComplexField, RealField, same_grid
from .grid import SpatialGrid


class InnerProducts(NamedTuple):
    real_inner: float
    symplectic: float


class Norms(NamedTuple):
    l2: float
    h1: float


def forward(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values)


def inverse(values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values)


def _derivative_multiplier(grid: SpatialGrid, axis: int, order: int) -> np.ndarray:
    k = grid.k_mesh[axis]
    multiplier = (1j * k) ** order
    if order % 2:
        # Odd derivatives of a real band-limited field must stay real.
        multiplier = np.where(np.isclose(np.abs(k), np.pi / grid.spacing), 0.0, multiplier)
    return multiplier


def derivative_values(values: np.ndarray, grid: SpatialGrid, axis: int, order: int = 1) -> np.ndarray:
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if not 0 <= axis < grid.dimension:
        raise ValueError(f"axis {axis} out of range for d={grid.dimension}")
    result = inverse(_derivative_multiplier(grid, axis, order) * forward(values))
    return result.real if np.isrealobj(values) else result


def gradient_values(values: np.ndarray, grid: SpatialGrid) -> tuple[np.ndarray, ...]:
    return tuple(derivative_values(values, grid, axis) for axis in range(grid.dimension))


def laplacian_values(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    result = inverse(-grid.k_squared * forward(values))
    return result.real if np.isrealobj(values) else result


def apply_symbol(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    result = inverse(symbol * forward(values))
    return result.real if np.isrealobj(values) else result


def shift_values(values: np.ndarray, grid: SpatialGrid, offset: np.ndarray) -> np.ndarray:
    """Return samples of x -> values(x - offset) via the Fourier shift theorem."""
    phase = sum(k * float(a) for k, a in zip(grid.k_mesh, offset))
    return inverse(np.exp(-1j * phase) * forward(values))


def pairing(u: np.ndarray, v: np.ndarray, grid: SpatialGrid) -> complex:
    return complex(np.vdot(v, u) * grid.cell_volume)


def real_inner_values(u: np.ndarray, v: np.ndarray, grid: SpatialGrid) -> float:
    return pairing(u, v, grid).real


def symplectic_values(u: np.ndarray, v: np.ndarray, grid: SpatialGrid) -> float:
    return pairing(u, v, grid).imag


def l2_squared(values: np.ndarray, grid: SpatialGrid) -> float:
    return float(np.sum(np.abs(values) ** 2) * grid.cell_volume)


def gradient_squared(values: np.ndarray, grid: SpatialGrid) -> float:
    transformed = forward(values)
    total = np.sum(grid.k_squared * np.abs(transformed) ** 2)
    return float(total * grid.cell_volume / grid.size)


def h1_squared(values: np.ndarray, grid: SpatialGrid) -> float:
    return l2_squared(values, grid) + gradient_squared(values, grid)


def kernel_transform(kernel: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Transform of a kernel sampled on the centred grid, scaled by h^d."""
    return forward(np.fft.ifftshift(kernel)) * grid.cell_volume


def convolve_values(kernel_hat: np.ndarray, values: np.ndarray) -> np.ndarray:
    result = inverse(kernel_hat * forward(values))
    scale = max(float(np.max(np.abs(result))), 1e-300)
    residue = float(np.max(np.abs(result.imag)))
    if np.isrealobj(values) and residue > 1e-10 * scale:
        raise NumericalError(f"convolution left imaginary residue {residue:.3e}")
    return result.real if np.isrealobj(values) else result


def dealias_mask(grid: SpatialGrid) -> np.ndarray:
    cutoff = (2.0 / 3.0) * np.pi / grid.spacing
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.k_mesh:
        mask &= np.abs(k) <= cutoff
    return mask


def inner_products(u: ComplexField, v: ComplexField) -> InnerProducts:
    """Real inner product Re∫u·conj(v) and symplectic form Im∫u·conj(v)."""
    grid = same_grid(u, v)
    value = pairing(u.values, v.values, grid)
    return InnerProducts(real_inner=value.real, symplectic=value.imag)


def spectral_derivative(u: ComplexField, axis: int, order: int = 1) -> ComplexField:
    return ComplexField(u.grid, derivative_values(u.values, u.grid, axis, order))


def norms(u: ComplexField) -> Norms:
    l2 = l2_squared(u.values, u.grid)
    h1 = l2 + gradient_squared(u.values, u.grid)
    return Norms(l2=float(np.sqrt(l2)), h1=float(np.sqrt(h1)))


def periodic_convolution(kernel: RealField, g: RealField) -> RealField:
    grid = same_grid(kernel, g)
    return RealField(grid, convolve_values(kernel_transform(kernel.values, grid), g.values))
