from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..fields.field import RealField
from ..fields.grid import SpatialGrid

FAMILIES = ("zero", "cosine", "gaussian_well")


@dataclass(frozen=True)
class PotentialSpec:
    """Slowly varying external potential with an analytic gradient.

    cosine:         V(x) = A·Σ cos(κ_i x_i)
    gaussian_well:  V(x) = -A·exp(-κ²|x|²/2)
    zero:           V ≡ 0

    ``eps_v`` is sup|∇V|/√μ₀ and is checked against the family parameters.
    """

    family: str
    dimension: int
    amplitude: float = 0.0
    rate: tuple[float, ...] = ()
    mu0: float = 1.0
    eps_v: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        rate = tuple(float(k) for k in self.rate) if self.rate else (0.0,) * self.dimension
        if self.family == "gaussian_well" and len(set(rate)) > 1:
            raise ValueError("gaussian_well uses one isotropic rate")
        if len(rate) != self.dimension:
            raise ValueError(f"rate needs {self.dimension} entries, got {len(rate)}")
        object.__setattr__(self, "rate", rate)
        expected = self.sup_gradient() / np.sqrt(self.mu0)
        if abs(expected - self.eps_v) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(
                f"declared eps_v={self.eps_v!r} disagrees with family parameters ({expected!r})"
            )

    @classmethod
    def zero(cls, dimension: int, mu0: float = 1.0) -> "PotentialSpec":
        return cls("zero", dimension, mu0=mu0)

    @classmethod
    def cosine(
        cls, amplitude: float, rate: float | Sequence[float], dimension: int, mu0: float = 1.0
    ) -> "PotentialSpec":
        rates = (float(rate),) * dimension if np.isscalar(rate) else tuple(rate)  # type: ignore[arg-type]
        eps = abs(amplitude) * float(np.linalg.norm(rates)) / np.sqrt(mu0)
        return cls("cosine", dimension, float(amplitude), rates, mu0, eps)

    @classmethod
    def gaussian_well(
        cls, depth: float, rate: float, dimension: int, mu0: float = 1.0
    ) -> "PotentialSpec":
        eps = abs(depth) * abs(rate) * np.exp(-0.5) / np.sqrt(mu0)
        return cls("gaussian_well", dimension, float(depth), (float(rate),) * dimension, mu0, eps)

    @classmethod
    def from_eps(
        cls, family: str, eps_v: float, amplitude: float, dimension: int, mu0: float = 1.0
    ) -> "PotentialSpec":
        """Choose the spatial rate so that sup|∇V|/√μ₀ equals ``eps_v``."""
        if family == "zero" or eps_v == 0:
            return cls.zero(dimension, mu0)
        if amplitude == 0:
            raise ValueError("amplitude must be nonzero to realize eps_v > 0")
        if family == "cosine":
            per_axis = eps_v * np.sqrt(mu0) / (abs(amplitude) * np.sqrt(dimension))
            return cls.cosine(amplitude, per_axis, dimension, mu0)
        if family == "gaussian_well":
            rate = eps_v * np.sqrt(mu0) * np.exp(0.5) / abs(amplitude)
            return cls.gaussian_well(amplitude, rate, dimension, mu0)
        raise ValueError(f"unknown potential family {family!r}")

    @property
    def wavevector(self) -> np.ndarray:
        return np.asarray(self.rate, dtype=float)

    def sup_gradient(self) -> float:
        if self.family == "cosine":
            return abs(self.amplitude) * float(np.linalg.norm(self.rate))
        if self.family == "gaussian_well":
            return abs(self.amplitude) * abs(self.rate[0]) * float(np.exp(-0.5))
        return 0.0

    def _evaluate(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        if self.family == "cosine":
            return self.amplitude * sum(np.cos(k * x) for k, x in zip(self.rate, coords))
        if self.family == "gaussian_well":
            r2 = sum(x * x for x in coords)
            return -self.amplitude * np.exp(-0.5 * self.rate[0] ** 2 * r2)
        return np.zeros_like(np.asarray(coords[0], dtype=float))

    def _gradient(self, coords: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
        if self.family == "cosine":
            return tuple(-self.amplitude * k * np.sin(k * x) for k, x in zip(self.rate, coords))
        if self.family == "gaussian_well":
            k2 = self.rate[0] ** 2
            bump = self.amplitude * k2 * np.exp(-0.5 * k2 * sum(x * x for x in coords))
            return tuple(bump * x for x in coords)
        return tuple(np.zeros_like(np.asarray(x, dtype=float)) for x in coords)

    def values(self, grid: SpatialGrid) -> np.ndarray:
        return np.asarray(self._evaluate(grid.coordinates), dtype=float) * np.ones(grid.shape)

    def gradient_values(self, grid: SpatialGrid) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(g, dtype=float) * np.ones(grid.shape) for g in self._gradient(grid.coordinates))

    def field(self, grid: SpatialGrid) -> RealField:
        return RealField(grid, self.values(grid))

    def at(self, point: Sequence[float]) -> float:
        coords = [np.asarray(float(x)) for x in point]
        return float(self._evaluate(coords))

    def gradient_at(self, point: Sequence[float]) -> np.ndarray:
        coords = [np.asarray(float(x)) for x in point]
        return np.array([float(g) for g in self._gradient(coords)])

    def hessian_at(self, point: Sequence[float]) -> np.ndarray:
        x = np.asarray(point, dtype=float)
        d = self.dimension
        if self.family == "cosine":
            return np.diag([-self.amplitude * k * k * np.cos(k * xi) for k, xi in zip(self.rate, x)])
        if self.family == "gaussian_well":
            k2 = self.rate[0] ** 2
            bump = self.amplitude * k2 * np.exp(-0.5 * k2 * float(x @ x))
            return bump * (np.eye(d) - k2 * np.outer(x, x))
        return np.zeros((d, d))

    def remainder_values(self, grid: SpatialGrid, center: Sequence[float]) -> np.ndarray:
        """R_V(x) = V(x+a) - V(a) - ∇V(a)·x on the moving-frame grid."""
        a = np.asarray(center, dtype=float)
        shifted = [x + ai for x, ai in zip(grid.coordinates, a)]
        base = self._evaluate(shifted)
        slope = self.gradient_at(a)
        linear = sum(g * x for g, x in zip(slope, grid.coordinates))
        return np.asarray(base - self.at(a) - linear, dtype=float) * np.ones(grid.shape)

    def describe(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "rate": list(self.rate),
            "eps_v": self.eps_v,
            "mu0": self.mu0,
        }
