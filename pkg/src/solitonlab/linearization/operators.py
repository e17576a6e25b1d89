"""L₁ = -Δ + μ - f^{(1)}(η) and L₂ = -Δ + μ - f^{(2)}(η).

Local nonlinearities get dense radial matrices per angular sector k (the
operators A_{μ,k}); every nonlinearity also gets matrix-free actions on a
periodic analysis grid, which is the only representation for convolution
terms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator

from ..core.exceptions import NumericalError
from ..fields import spectral
from ..fields.grid import SpatialGrid
from ..model.nonlinearity import LocalNonlinearity, Nonlinearity
from ..profile.solver import PLANE_POINTS, profile_grid, profile_on_grid
from ..profile.types import RadialProfile
from .radial import MAX_SECTOR, BesselGrid, sector_grid, sector_multiplicity

logger = logging.getLogger(__name__)

DVR_POINTS = 2048
SYMMETRY_TOLERANCE = 1e-12
OPERATOR_NAMES = ("L1", "L2")


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """One self-adjoint piece of the linearization.

    Radial operators act on DVR coefficients c_i = √ω_i r_i^{(d-1)/2} g(r_i), so
    the flat Euclidean product of coefficients is the L² product on the sector.
    Grid operators act on real samples of the analysis grid.
    """

    name: str
    domain: str
    mu: float
    sector: Optional[int] = None
    matrix: Optional[np.ndarray] = None
    kinetic: Optional[np.ndarray] = None
    bessel: Optional[BesselGrid] = None
    grid: Optional[SpatialGrid] = None
    action: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def size(self) -> int:
        if self.matrix is not None:
            return self.matrix.shape[0]
        assert self.grid is not None
        return self.grid.size

    @property
    def multiplicity(self) -> int:
        if self.bessel is None or self.sector is None:
            return 1
        return sector_multiplicity(self.bessel.dimension, self.sector)

    @property
    def label(self) -> str:
        return self.name if self.sector is None else f"{self.name}[k={self.sector}]"

    def apply(self, vector: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ vector
        assert self.action is not None and self.grid is not None
        return self.action(np.asarray(vector).reshape(self.grid.shape)).ravel()

    def gram(self) -> np.ndarray:
        """H¹ Gram matrix -Δ + 1 in the sector basis."""
        if self.kinetic is None:
            raise ValueError("Gram matrix is only assembled for radial sectors")
        return self.kinetic + np.eye(self.kinetic.shape[0])

    def apply_gram(self, vector: np.ndarray) -> np.ndarray:
        if self.kinetic is not None:
            return self.gram() @ vector
        assert self.grid is not None
        values = np.asarray(vector).reshape(self.grid.shape)
        return spectral.apply_symbol(values, 1.0 + self.grid.k_squared).ravel()

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.size, self.size), matvec=self.apply, dtype=float)

    def symmetry_residual(self, seed: int = 0) -> float:
        if self.matrix is not None:
            scale = float(np.max(np.abs(self.matrix)))
            return float(np.max(np.abs(self.matrix - self.matrix.T))) / scale
        rng = np.random.default_rng(seed)
        u, v = rng.standard_normal((2, self.size))
        left = float(u @ self.apply(v))
        right = float(self.apply(u) @ v)
        return abs(left - right) / max(abs(left), abs(right), 1e-300)


@dataclass(eq=False)
class OperatorSet:
    profile: RadialProfile
    spec: Nonlinearity
    k_max: int
    grid: SpatialGrid
    eta_grid: np.ndarray
    radial: dict[tuple[str, int], DiscretizedOperator] = field(default_factory=dict)
    full: dict[str, DiscretizedOperator] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.profile.dimension

    @property
    def mu(self) -> float:
        return self.profile.mu

    @property
    def has_radial(self) -> bool:
        return bool(self.radial)

    def sectors(self, name: str) -> Iterator[DiscretizedOperator]:
        for (label, _), operator in sorted(self.radial.items(), key=lambda item: item[0][1]):
            if label == name:
                yield operator

    def sector(self, name: str, k: int) -> DiscretizedOperator:
        return self.radial[(name, k)]

    def block_apply(self, w: np.ndarray) -> np.ndarray:
        """𝓛w = L₁ Re w + i L₂ Im w on the analysis grid."""
        real = self.full["L1"].apply(w.real.ravel()).reshape(self.grid.shape)
        imag = self.full["L2"].apply(w.imag.ravel()).reshape(self.grid.shape)
        return real + 1j * imag


def analysis_grid(profile: RadialProfile, plane_points: int = PLANE_POINTS) -> SpatialGrid:
    return profile_grid(profile.mu, profile.dimension, profile.intervals, plane_points)


def _grid_operators(
    profile: RadialProfile, spec: Nonlinearity, grid: SpatialGrid
) -> tuple[np.ndarray, dict[str, DiscretizedOperator]]:
    spec.prepare(grid)
    eta = profile_on_grid(profile, grid)
    linearization = spec.linearize(eta, grid)
    symbol = profile.mu + grid.k_squared
    gauge = linearization.gauge_potential

    def l1(w: np.ndarray) -> np.ndarray:
        return spectral.apply_symbol(w, symbol) - linearization.real_action(w)

    def l2(w: np.ndarray) -> np.ndarray:
        return spectral.apply_symbol(w, symbol) - gauge * w

    operators = {
        "L1": DiscretizedOperator("L1", "grid", profile.mu, grid=grid, action=l1),
        "L2": DiscretizedOperator("L2", "grid", profile.mu, grid=grid, action=l2),
    }
    return eta, operators


def _radial_operators(
    profile: RadialProfile, local: LocalNonlinearity, k_max: int, points: int
) -> dict[tuple[str, int], DiscretizedOperator]:
    d, mu = profile.dimension, profile.mu
    operators: dict[tuple[str, int], DiscretizedOperator] = {}
    for k in range(k_max + 1):
        bessel, kinetic = sector_grid(d, k, profile.r_max, points)
        eta = profile.evaluate(bessel.points)
        potentials = {"L1": local.real_multiplier(eta), "L2": local.h(eta * eta)}
        for name, potential in potentials.items():
            matrix = kinetic + np.diag(mu - potential)
            operators[(name, k)] = DiscretizedOperator(
                name, "radial", mu, sector=k, matrix=matrix, kinetic=kinetic, bessel=bessel
            )
    return operators


def _check_sector_shift(operators: dict[tuple[str, int], DiscretizedOperator], k_max: int) -> None:
    """A_{μ,k} - A_{μ,1} must be the non-negative diagonal (λ_k - λ₁)/r²."""
    for name in OPERATOR_NAMES:
        if (name, 1) not in operators:
            return
        base = operators[(name, 1)].matrix
        for k in range(2, k_max + 1):
            difference = operators[(name, k)].matrix - base
            off_diagonal = difference - np.diag(np.diag(difference))
            if np.any(off_diagonal != 0) or np.any(np.diag(difference) < 0):
                raise NumericalError(f"sector {k} of {name} is not a positive shift of sector 1")


def assemble_operators(
    profile: RadialProfile,
    spec: Nonlinearity,
    k_max: Optional[int] = None,
    *,
    dvr_points: int = DVR_POINTS,
    plane_points: int = PLANE_POINTS,
) -> OperatorSet:
    d = profile.dimension
    if k_max is None:
        k_max = 1 if d == 1 else 4
    if k_max > MAX_SECTOR:
        raise ValueError(f"k_max={k_max} exceeds the supported {MAX_SECTOR} sectors")
    if d == 1:
        k_max = min(k_max, 1)
    grid = analysis_grid(profile, plane_points)
    eta, full = _grid_operators(profile, spec, grid)
    operators = OperatorSet(profile=profile, spec=spec, k_max=k_max, grid=grid, eta_grid=eta, full=full)
    if isinstance(spec, LocalNonlinearity):
        operators.radial = _radial_operators(profile, spec, k_max, dvr_points)
        _check_sector_shift(operators.radial, k_max)
    for operator in [*operators.radial.values(), *operators.full.values()]:
        residual = operator.symmetry_residual()
        if residual > (SYMMETRY_TOLERANCE if operator.matrix is not None else 1e-10):
            raise NumericalError(f"{operator.label} is not symmetric (residual {residual:.2e})")
    logger.info(
        "Assembled operators: mu=%g d=%d sectors=%d grid=%d^%d",
        profile.mu,
        d,
        len(operators.radial),
        grid.points,
        d,
    )
    return operators
