"""Gauge-covariant nonlinearities f(ψ) = g(|ψ|²)·ψ.

Every nonlinearity is described by its real *response* g, a function of the
density (pointwise for local terms, through a convolution for Hartree terms).
The same response drives the exact pointwise phase substep of the integrator.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from threading import Lock
from typing import Any, Callable, Optional

import numpy as np

from ..core.exceptions import NumericalError
from ..fields import spectral
from ..fields.field import ComplexField
from ..fields.grid import SpatialGrid

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

_KERNEL_LOCK = Lock()


@dataclass(frozen=True, eq=False)
class Linearization:
    """Block form of the real-linearization f'(η) at a real profile η.

    ``real_action`` applies f^{(1)} to the real part of a perturbation,
    ``gauge_potential`` is the multiplier f^{(2)} acting on the imaginary part.
    ``real_potential`` is the pointwise multiplier behind f^{(1)} when the
    nonlinearity is local, ``None`` otherwise.
    """

    real_action: Callable[[np.ndarray], np.ndarray]
    gauge_potential: np.ndarray
    real_potential: Optional[np.ndarray] = None

    def apply(self, w: np.ndarray) -> np.ndarray:
        return self.real_action(w.real) + 1j * self.gauge_potential * w.imag


class Nonlinearity(ABC):
    kind: str = "abstract"

    @property
    @abstractmethod
    def homogeneity(self) -> float:
        """Leading homogeneity p of f, used for the Petviashvili exponent."""

    @property
    def is_local(self) -> bool:
        return False

    @abstractmethod
    def response(self, density: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        """Real multiplier g with f(ψ) = g·ψ for the density |ψ|²."""

    @abstractmethod
    def energy_density_integral(self, density: np.ndarray, grid: SpatialGrid) -> float:
        """F(ψ) as a function of the density."""

    @abstractmethod
    def linearize(self, eta: np.ndarray, grid: SpatialGrid) -> Linearization:
        ...

    @abstractmethod
    def describe(self) -> dict[str, Any]:
        ...

    def apply(self, values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        density = values.real**2 + values.imag**2 if np.iscomplexobj(values) else values * values
        result = self.response(density, grid) * values
        if not np.all(np.isfinite(result)):
            raise NumericalError(f"{self.kind} nonlinearity produced non-finite values")
        return result

    def prepare(self, grid: SpatialGrid) -> None:
        """Realize grid-dependent data before the nonlinearity is shared between threads."""


class LocalNonlinearity(Nonlinearity):
    """f(ψ) = h(|ψ|²)ψ with h, h', h'' and the antiderivative H available pointwise."""

    kind = "local"

    @property
    def is_local(self) -> bool:
        return True

    @abstractmethod
    def h(self, p: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def dh(self, p: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d2h(self, p: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def antiderivative(self, p: np.ndarray) -> np.ndarray:
        """H(p) = ∫₀ᵖ h."""

    def response(self, density: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        return self.h(density)

    def energy_density_integral(self, density: np.ndarray, grid: SpatialGrid) -> float:
        return 0.5 * float(np.sum(self.antiderivative(density)) * grid.cell_volume)

    def real_multiplier(self, eta: np.ndarray) -> np.ndarray:
        p = eta * eta
        return self.h(p) + 2.0 * self.dh(p) * p

    def linearize(self, eta: np.ndarray, grid: SpatialGrid) -> Linearization:
        multiplier = self.real_multiplier(eta)
        return Linearization(
            real_action=lambda w: multiplier * w,
            gauge_potential=self.h(eta * eta),
            real_potential=multiplier,
        )


@dataclass(frozen=True)
class PowerNonlinearity(LocalNonlinearity):
    exponent: float = 1.0
    coupling: float = 1.0
    kind: str = field(default="power", init=False)

    def __post_init__(self) -> None:
        if not (self.exponent > 0 and self.coupling > 0):
            raise ValueError("power nonlinearity requires exponent > 0 and coupling > 0")

    @property
    def homogeneity(self) -> float:
        return 2.0 * self.exponent + 1.0

    def h(self, p: np.ndarray) -> np.ndarray:
        return self.coupling * np.power(np.maximum(p, 0.0), self.exponent)

    def dh(self, p: np.ndarray) -> np.ndarray:
        s = self.exponent
        p = np.maximum(p, 0.0)
        if s >= 1.0:
            return self.coupling * s * np.power(p, s - 1.0)
        with np.errstate(divide="ignore"):
            return np.where(p > 0, self.coupling * s * np.power(np.maximum(p, 1e-300), s - 1.0), np.inf)

    def d2h(self, p: np.ndarray) -> np.ndarray:
        s = self.exponent
        p = np.maximum(p, 0.0)
        if s == 1.0:
            return np.zeros_like(p)
        if s >= 2.0:
            return self.coupling * s * (s - 1.0) * np.power(p, s - 2.0)
        edge = np.inf if s > 1.0 else -np.inf
        return np.where(
            p > 0, self.coupling * s * (s - 1.0) * np.power(np.maximum(p, 1e-300), s - 2.0), edge
        )

    def antiderivative(self, p: np.ndarray) -> np.ndarray:
        s = self.exponent
        return self.coupling * np.power(np.maximum(p, 0.0), s + 1.0) / (s + 1.0)

    def real_multiplier(self, eta: np.ndarray) -> np.ndarray:
        # h + 2h'p = (2s+1)·h for a pure power; avoids h' at p = 0.
        return (2.0 * self.exponent + 1.0) * self.h(eta * eta)

    def describe(self) -> dict[str, Any]:
        return {"kind": "power", "exponent": self.exponent, "coupling": self.coupling}


@dataclass(frozen=True)
class GeneralLocalNonlinearity(LocalNonlinearity):
    """Local nonlinearity given by callables; ``name`` identifies it in reports."""

    h_fn: ArrayFn = field(repr=False)
    dh_fn: ArrayFn = field(repr=False)
    d2h_fn: ArrayFn = field(repr=False)
    antiderivative_fn: Optional[ArrayFn] = field(default=None, repr=False)
    leading_power: float = 3.0
    name: str = "local"
    parameters: tuple[tuple[str, float], ...] = ()
    kind: str = field(default="local", init=False)

    def __post_init__(self) -> None:
        at_zero = float(np.asarray(self.h_fn(np.zeros(1)))[0])
        if abs(at_zero) > 1e-14:
            raise ValueError(f"local nonlinearity requires h(0) = 0, got {at_zero}")

    @property
    def homogeneity(self) -> float:
        return self.leading_power

    def h(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.h_fn(p), dtype=float)

    def dh(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.dh_fn(p), dtype=float)

    def d2h(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.d2h_fn(p), dtype=float)

    def antiderivative(self, p: np.ndarray) -> np.ndarray:
        if self.antiderivative_fn is not None:
            return np.asarray(self.antiderivative_fn(p), dtype=float)
        return _antiderivative_by_quadrature(self.h, np.asarray(p, dtype=float))

    def describe(self) -> dict[str, Any]:
        return {"kind": self.name, **dict(self.parameters)}


def _antiderivative_by_quadrature(h: ArrayFn, p: np.ndarray) -> np.ndarray:
    # 16-point Gauss-Legendre on [0, p], elementwise.
    nodes, weights = np.polynomial.legendre.leggauss(16)
    flat = np.ravel(p)
    samples = 0.5 * (nodes[:, None] + 1.0) * flat[None, :]
    values = h(samples)
    return (0.5 * flat * (weights[:, None] * values).sum(axis=0)).reshape(np.shape(p))


def saturable(coupling: float = 1.0, saturation: float = 0.1) -> GeneralLocalNonlinearity:
    """h(p) = λp/(1+κp)."""
    lam, kap = float(coupling), float(saturation)
    if lam <= 0 or kap < 0:
        raise ValueError("saturable nonlinearity requires coupling > 0 and saturation >= 0")

    def antiderivative(p: np.ndarray) -> np.ndarray:
        if kap == 0:
            return 0.5 * lam * p * p
        return lam * (p / kap - np.log1p(kap * p) / kap**2)

    return GeneralLocalNonlinearity(
        h_fn=lambda p: lam * p / (1.0 + kap * p),
        dh_fn=lambda p: lam / (1.0 + kap * p) ** 2,
        d2h_fn=lambda p: -2.0 * lam * kap / (1.0 + kap * p) ** 3,
        antiderivative_fn=antiderivative,
        leading_power=3.0,
        name="saturable",
        parameters=(("coupling", lam), ("saturation", kap)),
    )


def cubic_quintic(cubic: float = 1.0, quintic: float = 0.0) -> GeneralLocalNonlinearity:
    """h(p) = λ₁p + λ₂p²."""
    a, b = float(cubic), float(quintic)
    if a <= 0 and b <= 0:
        raise ValueError("cubic-quintic nonlinearity needs a focusing term")
    return GeneralLocalNonlinearity(
        h_fn=lambda p: a * p + b * p * p,
        dh_fn=lambda p: a + 2.0 * b * p,
        d2h_fn=lambda p: np.full(np.shape(p), 2.0 * b),
        antiderivative_fn=lambda p: 0.5 * a * p * p + b * p**3 / 3.0,
        leading_power=3.0 if a > 0 else 5.0,
        name="cubic_quintic",
        parameters=(("cubic", a), ("quintic", b)),
    )


@dataclass(frozen=True)
class HartreeKernel:
    """Radial kernel W; ``shape`` is ``gaussian`` (normalized, width ℓ) or ``delta``."""

    shape: str = "gaussian"
    width: float = 0.5

    def __post_init__(self) -> None:
        if self.shape not in ("gaussian", "delta"):
            raise ValueError(f"unknown kernel shape {self.shape!r}")
        if self.shape == "gaussian" and self.width <= 0:
            raise ValueError("gaussian kernel width must be positive")

    def realize(self, grid: SpatialGrid) -> np.ndarray:
        if self.shape == "delta":
            values = np.zeros(grid.shape)
            values[(grid.points // 2,) * grid.dimension] = 1.0 / grid.cell_volume
            return values
        d = grid.dimension
        norm = (2.0 * np.pi * self.width**2) ** (-0.5 * d)
        return norm * np.exp(-0.5 * grid.radius**2 / self.width**2)

    def describe(self) -> dict[str, Any]:
        return {"shape": self.shape, "width": self.width}


@dataclass(frozen=True)
class HartreeNonlinearity(Nonlinearity):
    """f(ψ) = λ(W*|ψ|²)ψ with a periodic convolution on the grid."""

    kernel: HartreeKernel = field(default_factory=HartreeKernel)
    coupling: float = 1.0
    kind: str = field(default="hartree", init=False)
    _transforms: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.coupling == 0:
            raise ValueError("hartree coupling must be nonzero")

    @property
    def homogeneity(self) -> float:
        return 3.0

    def kernel_hat(self, grid: SpatialGrid) -> np.ndarray:
        cached = self._transforms.get(grid)
        if cached is not None:
            return cached
        with _KERNEL_LOCK:
            cached = self._transforms.get(grid)
            if cached is None:
                logger.debug("Realizing %s kernel on %s", self.kernel.shape, grid)
                cached = spectral.kernel_transform(self.kernel.realize(grid), grid)
                self._transforms[grid] = cached
        return cached

    def prepare(self, grid: SpatialGrid) -> None:
        self.kernel_hat(grid)

    def convolve(self, density: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        return spectral.convolve_values(self.kernel_hat(grid), density)

    def response(self, density: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        return self.coupling * self.convolve(density, grid)

    def energy_density_integral(self, density: np.ndarray, grid: SpatialGrid) -> float:
        return 0.25 * float(np.sum(self.response(density, grid) * density) * grid.cell_volume)

    def linearize(self, eta: np.ndarray, grid: SpatialGrid) -> Linearization:
        potential = self.response(eta * eta, grid)

        def real_action(w: np.ndarray) -> np.ndarray:
            return potential * w + 2.0 * self.coupling * eta * self.convolve(eta * w, grid)

        return Linearization(real_action=real_action, gauge_potential=potential)

    def describe(self) -> dict[str, Any]:
        return {"kind": "hartree", "coupling": self.coupling, "kernel": self.kernel.describe()}


@dataclass(frozen=True)
class CompositeNonlinearity(Nonlinearity):
    """h(|ψ|²)ψ + λ(W*|ψ|²)ψ."""

    local: LocalNonlinearity
    hartree: HartreeNonlinearity
    kind: str = field(default="composite", init=False)

    @property
    def homogeneity(self) -> float:
        return min(self.local.homogeneity, self.hartree.homogeneity)

    def prepare(self, grid: SpatialGrid) -> None:
        self.hartree.prepare(grid)

    def response(self, density: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        return self.local.response(density, grid) + self.hartree.response(density, grid)

    def energy_density_integral(self, density: np.ndarray, grid: SpatialGrid) -> float:
        return self.local.energy_density_integral(
            density, grid
        ) + self.hartree.energy_density_integral(density, grid)

    def linearize(self, eta: np.ndarray, grid: SpatialGrid) -> Linearization:
        local = self.local.linearize(eta, grid)
        nonlocal_part = self.hartree.linearize(eta, grid)
        return Linearization(
            real_action=lambda w: local.real_action(w) + nonlocal_part.real_action(w),
            gauge_potential=local.gauge_potential + nonlocal_part.gauge_potential,
        )

    def describe(self) -> dict[str, Any]:
        return {
            "kind": "composite",
            "local": self.local.describe(),
            "hartree": self.hartree.describe(),
        }


def apply_nonlinearity(spec: Nonlinearity, psi: ComplexField) -> ComplexField:
    """f(ψ) on the field's grid."""
    return ComplexField(psi.grid, spec.apply(psi.values, psi.grid))
