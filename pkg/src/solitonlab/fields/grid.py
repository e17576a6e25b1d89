from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic box [-L, L)^d sampled with n points per axis.

    Wavenumbers follow the FFT ordering, so arrays on the grid can be handed to
    ``scipy.fft`` without reordering.
    """

    dimension: int
    half_extent: float
    points: int

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.points < 16 or self.points & (self.points - 1):
            raise ValueError(f"points per axis must be a power of two >= 16, got {self.points}")
        if not np.isfinite(self.half_extent) or self.half_extent <= 0:
            raise ValueError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def k_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dimension), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.coordinates))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k * k for k in self.k_mesh)

    @property
    def max_k_squared(self) -> float:
        return float(self.k_squared.max())

    def displaced(self, offset: np.ndarray) -> tuple[np.ndarray, ...]:
        """Coordinates x - offset, per axis."""
        return tuple(x - float(a) for x, a in zip(self.coordinates, offset))

    def describe(self) -> dict[str, float | int]:
        return {
            "dimension": self.dimension,
            "half_extent": self.half_extent,
            "points": self.points,
            "spacing": self.spacing,
        }
