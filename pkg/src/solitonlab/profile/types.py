from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..core.exceptions import ParameterDomainError


@dataclass(frozen=True)
class ParameterDomain:
    """Closed frequency interval I₀ on which solitons are admitted."""

    mu_min: float
    mu_max: float

    def __post_init__(self) -> None:
        if not (0 < self.mu_min <= self.mu_max):
            raise ValueError(f"invalid frequency interval [{self.mu_min}, {self.mu_max}]")

    def contains(self, mu: float, slack: float = 1e-12) -> bool:
        return self.mu_min - slack <= mu <= self.mu_max + slack

    def check(self, mu: float) -> float:
        if not math.isfinite(mu) or not self.contains(mu):
            raise ParameterDomainError(mu=mu)
        return mu


@dataclass(frozen=True)
class SolitonParams:
    """Modulation parameters σ = (a, v, γ, μ); γ is kept unwrapped."""

    a: tuple[float, ...]
    v: tuple[float, ...]
    gamma: float
    mu: float

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in np.atleast_1d(self.a))
        v = tuple(float(x) for x in np.atleast_1d(self.v))
        if len(a) != len(v):
            raise ValueError(f"position has {len(a)} components, velocity {len(v)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "mu", float(self.mu))
        if not all(math.isfinite(x) for x in (*a, *v, self.gamma, self.mu)):
            raise ValueError("soliton parameters must be finite")
        if self.mu <= 0:
            raise ValueError(f"frequency must be positive, got {self.mu}")

    @classmethod
    def at_rest(cls, mu: float, dimension: int = 1) -> "SolitonParams":
        return cls((0.0,) * dimension, (0.0,) * dimension, 0.0, mu)

    @classmethod
    def from_vector(cls, vector: Sequence[float], dimension: int) -> "SolitonParams":
        """Inverse of :meth:`as_vector` (ordering a, v, γ, μ)."""
        d = dimension
        return cls(tuple(vector[:d]), tuple(vector[d : 2 * d]), vector[2 * d], vector[2 * d + 1])

    @property
    def dimension(self) -> int:
        return len(self.a)

    @property
    def position(self) -> np.ndarray:
        return np.asarray(self.a)

    @property
    def velocity(self) -> np.ndarray:
        return np.asarray(self.v)

    @property
    def wrapped_phase(self) -> float:
        return float(self.gamma % (2.0 * math.pi))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, [self.gamma, self.mu]])

    def validate(self, domain: ParameterDomain) -> "SolitonParams":
        domain.check(self.mu)
        return self

    def replace(self, **changes: Any) -> "SolitonParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        return {
            "a": list(self.a),
            "v": list(self.v),
            "gamma": self.gamma,
            "gamma_mod_2pi": self.wrapped_phase,
            "mu": self.mu,
        }


def _hermite(x: np.ndarray, y: np.ndarray, dydx: np.ndarray) -> CubicHermiteSpline:
    return CubicHermiteSpline(x, y, dydx, extrapolate=False)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Tabulated ground state η_μ(r) on r_i = i·r_max/N, i = 0..N.

    Values beyond r_max evaluate to zero; interpolation is cubic Hermite using
    the tabulated derivatives.
    """

    mu: float
    dimension: int
    radii: np.ndarray
    eta: np.ndarray
    eta_r: np.ndarray
    eta_rr: np.ndarray
    residual: float
    method: str
    nonlinearity: dict[str, Any]
    eta_mu: Optional[np.ndarray] = None
    eta_mu_r: Optional[np.ndarray] = None

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def spacing(self) -> float:
        return float(self.radii[1] - self.radii[0])

    @property
    def intervals(self) -> int:
        return self.radii.size - 1

    @property
    def amplitude(self) -> float:
        return float(self.eta[0])

    @property
    def has_mu_derivative(self) -> bool:
        return self.eta_mu is not None

    def with_mu_derivative(self, eta_mu: np.ndarray, eta_mu_r: np.ndarray) -> "RadialProfile":
        return dataclasses.replace(self, eta_mu=np.asarray(eta_mu), eta_mu_r=np.asarray(eta_mu_r))

    @cached_property
    def _value_spline(self) -> CubicHermiteSpline:
        return _hermite(self.radii, self.eta, self.eta_r)

    @cached_property
    def _slope_spline(self) -> CubicHermiteSpline:
        return _hermite(self.radii, self.eta_r, self.eta_rr)

    @cached_property
    def _mu_spline(self) -> CubicHermiteSpline:
        if self.eta_mu is None or self.eta_mu_r is None:
            raise ValueError("profile carries no mu-derivative")
        return _hermite(self.radii, self.eta_mu, self.eta_mu_r)

    @cached_property
    def _mu_slope_spline(self) -> CubicHermiteSpline:
        if self.eta_mu_r is None:
            raise ValueError("profile carries no mu-derivative")
        return _hermite(self.radii, self.eta_mu_r, np.gradient(self.eta_mu_r, self.radii, edge_order=2))

    def _sample(self, spline: CubicHermiteSpline, r: np.ndarray) -> np.ndarray:
        radius = np.abs(np.asarray(r, dtype=float))
        values = spline(np.minimum(radius, self.r_max))
        return np.where(radius > self.r_max, 0.0, values)

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        return self._sample(self._value_spline, r)

    def evaluate_slope(self, r: np.ndarray) -> np.ndarray:
        return self._sample(self._slope_spline, r)

    def evaluate_mu(self, r: np.ndarray) -> np.ndarray:
        return self._sample(self._mu_spline, r)

    def evaluate_mu_slope(self, r: np.ndarray) -> np.ndarray:
        return self._sample(self._mu_slope_spline, r)

    def summary(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "dimension": self.dimension,
            "amplitude": self.amplitude,
            "r_max": self.r_max,
            "points": int(self.radii.size),
            "residual": self.residual,
            "method": self.method,
            "nonlinearity": self.nonlinearity,
        }
