"""The soliton manifold η_σ, its tangent frame and the mass curve.

With θ(x) = ½v·(x - a) + γ the family is η_σ(x) = e^{iθ(x)} η_μ(|x - a|).
The frame is ordered translations, boosts, gauge, scaling:

    z_t = -e^{iθ}∇η(x - a),  z_b = i(x - a)e^{iθ}η(x - a),
    z_g = iη_σ,              z_s = e^{iθ}∂_μη(x - a).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from ..core.exceptions import GuardViolationError
from ..fields import spectral
from ..fields.field import ComplexField
from ..fields.grid import SpatialGrid
from ..linearization.radial import sphere_area
from ..model.nonlinearity import Nonlinearity
from .solver import solve_profile
from .types import RadialProfile, SolitonParams

logger = logging.getLogger(__name__)

GUARD_WIDTH = 10.0
FRAME_LABELS = ("translation", "boost", "gauge", "scaling")


@dataclass(frozen=True)
class MassPoint:
    mu: float
    mass: float
    mass_slope: float


@dataclass
class MassCurve:
    dimension: int
    nonlinearity: dict[str, Any]
    points: list[MassPoint] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        """Orbital stability verdict: m'(μ) > 0 at every sampled frequency."""
        return all(point.mass_slope > 0 for point in self.points)

    def verdict(self) -> str:
        return "pass" if self.stable else "fail"

    def as_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "nonlinearity": self.nonlinearity,
            "stability": self.verdict(),
            "points": [
                {"mu": p.mu, "m": p.mass, "m_prime": p.mass_slope} for p in self.points
            ],
        }


def _radial_integral(
    profile: RadialProfile,
    values: np.ndarray,
    origin: float,
    origin_curvature: float,
) -> float:
    """S_d∫g(r) r^{d-1} dr by the trapezoid rule.

    In 2D the integrand g·r has odd derivatives at the origin, so the first
    two Euler-Maclaurin end terms are added back.
    """
    r = profile.radii
    d = profile.dimension
    total = trapezoid(values * r ** (d - 1), r)
    if d == 2:
        h = profile.spacing
        total += h**2 / 12.0 * origin - h**4 / 240.0 * origin_curvature
    return sphere_area(d) * float(total)


def profile_mass(profile: RadialProfile) -> float:
    """m(μ) = ½∫η²."""
    eta = profile.eta
    curvature = 2.0 * eta[0] * profile.eta_rr[0]
    return 0.5 * _radial_integral(profile, eta * eta, eta[0] ** 2, curvature)


def profile_mass_slope(profile: RadialProfile) -> float:
    """m'(μ) = ⟨η, ∂_μη⟩."""
    if profile.eta_mu is None or profile.eta_mu_r is None:
        raise ValueError("profile carries no mu-derivative")
    eta, eta_mu = profile.eta, profile.eta_mu
    eta_mu_rr0 = (profile.eta_mu_r[1] - profile.eta_mu_r[0]) / profile.spacing
    curvature = profile.eta_rr[0] * eta_mu[0] + eta[0] * eta_mu_rr0
    return _radial_integral(profile, eta * eta_mu, eta[0] * eta_mu[0], curvature)


def mass_curve(
    spec: Nonlinearity,
    mu_list: Sequence[float],
    d: int,
    *,
    profiles: Optional[Sequence[RadialProfile]] = None,
    **solver_options: Any,
) -> MassCurve:
    """Mass and its slope along a list of frequencies, with the stability verdict."""
    curve = MassCurve(dimension=d, nonlinearity=spec.describe())
    if profiles is None:
        profiles = [solve_profile(spec, float(mu), d, **solver_options) for mu in mu_list]
    for profile in profiles:
        point = MassPoint(profile.mu, profile_mass(profile), profile_mass_slope(profile))
        logger.debug("Mass curve: mu=%g m=%.12g m'=%.12g", point.mu, point.mass, point.mass_slope)
        curve.points.append(point)
    if not curve.stable:
        logger.warning("Mass curve has m' <= 0; orbital stability criterion fails")
    return curve


# -- family --------------------------------------------------------------


def check_guard(profile: RadialProfile, sigma: SolitonParams, grid: SpatialGrid) -> None:
    margin = GUARD_WIDTH / np.sqrt(sigma.mu)
    for component in sigma.a:
        if abs(component) + margin > grid.half_extent:
            raise GuardViolationError(
                f"soliton at a={sigma.a} with margin {margin:.3g} leaves box of half-extent "
                f"{grid.half_extent:g}"
            )


def _phase(sigma: SolitonParams, grid: SpatialGrid) -> np.ndarray:
    displaced = grid.displaced(sigma.position)
    theta = sum(0.5 * v * x for v, x in zip(sigma.v, displaced)) + sigma.gamma
    return np.exp(1j * theta)


def _displaced_radius(sigma: SolitonParams, grid: SpatialGrid) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    displaced = grid.displaced(sigma.position)
    return displaced, np.sqrt(sum(x * x for x in displaced))


def synthesize(profile: RadialProfile, sigma: SolitonParams, grid: SpatialGrid) -> ComplexField:
    """η_σ sampled on the grid."""
    if sigma.dimension != grid.dimension or profile.dimension != grid.dimension:
        raise ValueError("soliton, profile and grid dimensions differ")
    check_guard(profile, sigma, grid)
    _, radius = _displaced_radius(sigma, grid)
    return ComplexField(grid, _phase(sigma, grid) * profile.evaluate(radius))


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """The 2d+2 tangent vectors of the soliton manifold at σ."""

    sigma: SolitonParams
    grid: SpatialGrid
    translations: tuple[ComplexField, ...]
    boosts: tuple[ComplexField, ...]
    gauge: ComplexField
    scaling: ComplexField

    @property
    def fields(self) -> tuple[ComplexField, ...]:
        return (*self.translations, *self.boosts, self.gauge, self.scaling)

    @property
    def labels(self) -> tuple[str, ...]:
        d = self.grid.dimension
        axes = "xy"[:d]
        return (
            *(f"t_{axis}" for axis in axes),
            *(f"b_{axis}" for axis in axes),
            "g",
            "s",
        )

    def __len__(self) -> int:
        return 2 * self.grid.dimension + 2

    def __iter__(self) -> Iterator[ComplexField]:
        return iter(self.fields)

    def __getitem__(self, index: int) -> ComplexField:
        return self.fields[index]

    def as_array(self) -> np.ndarray:
        return np.stack([z.values for z in self.fields])


def tangent_frame(profile: RadialProfile, sigma: SolitonParams, grid: SpatialGrid) -> TangentFrame:
    if not profile.has_mu_derivative:
        raise ValueError("tangent frame needs a profile with its mu-derivative")
    check_guard(profile, sigma, grid)
    phase = _phase(sigma, grid)
    displaced, radius = _displaced_radius(sigma, grid)
    eta = profile.evaluate(radius)
    slope = profile.evaluate_slope(radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = [np.where(radius > 0, x / radius, 0.0) for x in displaced]
    translations = tuple(ComplexField(grid, -phase * slope * u) for u in unit)
    boosts = tuple(ComplexField(grid, 1j * x * phase * eta) for x in displaced)
    gauge = ComplexField(grid, 1j * phase * eta)
    scaling = ComplexField(grid, phase * profile.evaluate_mu(radius))
    return TangentFrame(sigma, grid, translations, boosts, gauge, scaling)


def frame_transform(psi: ComplexField, sigma: SolitonParams) -> ComplexField:
    """u = S⁻¹ψ: shift by -a, then remove the phase ½v·y + γ."""
    grid = psi.grid
    recentred = spectral.shift_values(psi.values, grid, -sigma.position)
    theta = sum(0.5 * v * y for v, y in zip(sigma.v, grid.coordinates)) + sigma.gamma
    return ComplexField(grid, np.exp(-1j * theta) * recentred)


def inverse_frame_transform(u: ComplexField, sigma: SolitonParams) -> ComplexField:
    """ψ = S u: attach the phase ½v·y + γ, then shift by a."""
    grid = u.grid
    theta = sum(0.5 * v * y for v, y in zip(sigma.v, grid.coordinates)) + sigma.gamma
    return ComplexField(grid, spectral.shift_values(np.exp(1j * theta) * u.values, grid, sigma.position))
