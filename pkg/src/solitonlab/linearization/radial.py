"""Bessel discrete-variable representation of radial Schrödinger operators.

For angular sector k the reduced function u(r) = r^{(d-1)/2} g(r) obeys
-u'' + (ν² - ¼)/r² u with ν = k + (d-2)/2. The DVR points are the zeros of
J_ν scaled into [0, R]; the kinetic matrix is dense and symmetric, so every
sector eigenproblem stays a plain symmetric one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

MAX_SECTOR = 8


def sector_order(dimension: int, sector: int) -> float:
    return sector + 0.5 * (dimension - 2)


def angular_eigenvalue(dimension: int, sector: int) -> float:
    """λ_k = k(d - 2 + k)."""
    return float(sector * (dimension - 2 + sector))


def sphere_area(dimension: int) -> float:
    """Measure of the unit sphere S^{d-1}; for d=1 the two points ±1."""
    return 2.0 if dimension == 1 else 2.0 * np.pi


def bessel_zeros(order: float, count: int) -> np.ndarray:
    index = np.arange(1, count + 1, dtype=float)
    if order == -0.5:
        return (index - 0.5) * np.pi
    if order == 0.5:
        return index * np.pi
    if float(order).is_integer() and order >= 0:
        return special.jn_zeros(int(order), count)
    raise ValueError(f"no zero table for Bessel order {order}")


@dataclass(frozen=True, eq=False)
class BesselGrid:
    order: float
    dimension: int
    extent: float
    cutoff: float
    points: np.ndarray
    weights: np.ndarray
    kinetic: np.ndarray

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def radial_scale(self) -> np.ndarray:
        """√ω_i · r_i^{(d-1)/2}: maps samples g(r_i) to DVR coefficients."""
        return np.sqrt(self.weights) * self.points ** (0.5 * (self.dimension - 1))

    def coefficients(self, samples: np.ndarray) -> np.ndarray:
        return self.radial_scale * samples

    def samples(self, coefficients: np.ndarray) -> np.ndarray:
        return coefficients / self.radial_scale

    def inner(self, first: np.ndarray, second: np.ndarray) -> float:
        """Full-space L² pairing of two radial functions given as DVR coefficients."""
        return sphere_area(self.dimension) * float(first @ second)

    def centrifugal(self, extra: float) -> np.ndarray:
        return extra / self.points**2


@lru_cache(maxsize=32)
def bessel_grid(order: float, extent: float, points: int, dimension: int) -> BesselGrid:
    zeros = bessel_zeros(order, points + 1)
    cutoff = zeros[-1] / extent
    z = zeros[:-1]
    zi, zj = np.meshgrid(z, z, indexing="ij")
    index = np.arange(points)
    sign = np.where((index[:, None] - index[None, :]) % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kinetic = 8.0 * sign * zi * zj / (zi**2 - zj**2) ** 2
    np.fill_diagonal(kinetic, (1.0 + 2.0 * (order**2 - 1.0) / z**2) / 3.0)
    kinetic *= cutoff**2
    weights = 2.0 / (cutoff * z * special.jv(order + 1.0, z) ** 2)
    kinetic.setflags(write=False)
    return BesselGrid(
        order=order,
        dimension=dimension,
        extent=extent,
        cutoff=cutoff,
        points=z / cutoff,
        weights=weights,
        kinetic=kinetic,
    )


def sector_grid(dimension: int, sector: int, extent: float, points: int) -> tuple[BesselGrid, np.ndarray]:
    """Grid and kinetic matrix (-Δ restricted to sector k) for one angular sector.

    Sectors k >= 2 reuse the k = 1 grid and add (λ_k - λ_1)/r² on the diagonal.
    """
    if sector < 0 or sector > MAX_SECTOR:
        raise ValueError(f"sector must be in [0, {MAX_SECTOR}], got {sector}")
    if dimension == 1 and sector > 1:
        raise ValueError("d=1 has only the even (k=0) and odd (k=1) sectors")
    base = 0 if sector == 0 else 1
    grid = bessel_grid(sector_order(dimension, base), float(extent), int(points), dimension)
    kinetic = np.array(grid.kinetic)
    if sector >= 2:
        gap = angular_eigenvalue(dimension, sector) - angular_eigenvalue(dimension, 1)
        kinetic[np.diag_indices_from(kinetic)] += grid.centrifugal(gap)
    return grid, kinetic


def sector_multiplicity(dimension: int, sector: int) -> int:
    if dimension == 1 or sector == 0:
        return 1
    return 2
