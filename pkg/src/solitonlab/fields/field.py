from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..core.exceptions import GridMismatchError, NumericalError
from .grid import SpatialGrid

Scalar = Union[int, float, complex]


def _frozen(values: np.ndarray, dtype: type, grid: SpatialGrid, label: str) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    if array.shape != grid.shape:
        if array.size != grid.size:
            raise GridMismatchError(
                f"{label} has {array.size} values, grid expects {grid.size}"
            )
        array = array.reshape(grid.shape)
    if not np.all(np.isfinite(array)):
        raise NumericalError(f"{label} contains non-finite values")
    array.setflags(write=False)
    return array


def same_grid(first: "ComplexField | RealField", second: "ComplexField | RealField") -> SpatialGrid:
    if first.grid != second.grid:
        raise GridMismatchError(f"grid mismatch: {first.grid} vs {second.grid}")
    return first.grid


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of a field on a periodic grid; immutable after construction."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _frozen(self.values, np.complex128, self.grid, "complex field")
        )

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def density(self) -> "RealField":
        return RealField(self.grid, self.values.real**2 + self.values.imag**2)

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def _operand(self, other: "ComplexField | RealField | Scalar") -> np.ndarray | Scalar:
        if isinstance(other, (ComplexField, RealField)):
            same_grid(self, other)
            return other.values
        return other

    def __add__(self, other: "ComplexField | RealField | Scalar") -> "ComplexField":
        return ComplexField(self.grid, self.values + self._operand(other))

    def __sub__(self, other: "ComplexField | RealField | Scalar") -> "ComplexField":
        return ComplexField(self.grid, self.values - self._operand(other))

    def __mul__(self, other: "ComplexField | RealField | Scalar") -> "ComplexField":
        return ComplexField(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self) -> "ComplexField":
        return ComplexField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples on a periodic grid (potentials, densities, kernels)."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values, np.float64, self.grid, "real field"))

    @classmethod
    def constant(cls, grid: SpatialGrid, value: float) -> "RealField":
        return cls(grid, np.full(grid.shape, float(value)))

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)
