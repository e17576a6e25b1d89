"""Profiles on demand across a frequency interval.

Pure powers are rescaled from the μ = 1 solution. Other nonlinearities are
solved on a lattice μ_j = j·spacing and interpolated in μ with four-point
Lagrange weights at fixed table index, i.e. at fixed scaled radius √μ·r.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from collections import OrderedDict
from threading import Lock
from typing import Any, Optional

import numpy as np

from ..model.nonlinearity import Nonlinearity, PowerNonlinearity
from .solver import RADIAL_POINTS, PLANE_POINTS, radial_extent, scaling_mu_derivative, solve_profile
from .types import ParameterDomain, RadialProfile

logger = logging.getLogger(__name__)

LATTICE_SPACING = 0.01
SECOND_DERIVATIVE_STEP = 1e-3
# Recent μ values only: a tracked run visits a fresh μ on every Newton trial.
PROFILE_CACHE_SIZE = 8


def _lagrange_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    weights = np.ones(nodes.size)
    for i, node in enumerate(nodes):
        for j, other in enumerate(nodes):
            if i != j:
                weights[i] *= (x - other) / (node - other)
    return weights


class ProfileCache:
    def __init__(
        self,
        spec: Nonlinearity,
        dimension: int,
        domain: ParameterDomain,
        *,
        radial_points: int = RADIAL_POINTS,
        plane_points: int = PLANE_POINTS,
        spacing: float = LATTICE_SPACING,
        max_profiles: int = PROFILE_CACHE_SIZE,
    ) -> None:
        self.spec = spec
        self.dimension = dimension
        self.domain = domain
        self.radial_points = radial_points
        self.plane_points = plane_points
        self.spacing = spacing
        self.max_profiles = max_profiles
        self._lock = Lock()
        self._nodes: dict[int, RadialProfile] = {}
        self._profiles: OrderedDict[float, RadialProfile] = OrderedDict()

    @property
    def scaling(self) -> bool:
        return isinstance(self.spec, PowerNonlinearity)

    def _solve(self, mu: float) -> RadialProfile:
        return solve_profile(
            self.spec,
            mu,
            self.dimension,
            radial_points=self.radial_points,
            plane_points=self.plane_points,
        )

    def _node(self, index: int) -> RadialProfile:
        with self._lock:
            cached = self._nodes.get(index)
        if cached is not None:
            return cached
        profile = self._solve(index * (1.0 if self.scaling else self.spacing))
        with self._lock:
            return self._nodes.setdefault(index, profile)

    def _rescaled(self, mu: float) -> RadialProfile:
        """η_μ(r) = μ^{1/2s} η₁(√μ r) at matching table indices."""
        base = self._node(1)
        s = self.spec.exponent  # type: ignore[attr-defined]
        amplitude = mu ** (0.5 / s)
        root = math.sqrt(mu)
        profile = dataclasses.replace(
            base,
            mu=float(mu),
            radii=np.arange(base.radii.size) * (radial_extent(mu) / base.intervals),
            eta=amplitude * base.eta,
            eta_r=amplitude * root * base.eta_r,
            eta_rr=amplitude * mu * base.eta_rr,
            residual=amplitude * mu * base.residual,
            method="scaling",
            eta_mu=None,
            eta_mu_r=None,
        )
        return profile.with_mu_derivative(*scaling_mu_derivative(profile, s))

    def _interpolated(self, mu: float) -> RadialProfile:
        position = mu / self.spacing
        nearest = round(position)
        if abs(position - nearest) < 1e-9:
            return self._node(int(nearest))
        low = math.floor(position)
        indices = [low - 1, low, low + 1, low + 2]
        if indices[0] < 1:
            indices = [i - indices[0] + 1 for i in indices]
        nodes = [self._node(i) for i in indices]
        weights = _lagrange_weights(np.array(indices, dtype=float) * self.spacing, mu)

        def blend(name: str) -> np.ndarray:
            return sum(w * getattr(node, name) for w, node in zip(weights, nodes))

        base = nodes[1]
        return dataclasses.replace(
            base,
            mu=float(mu),
            radii=np.arange(base.radii.size) * (radial_extent(mu) / base.intervals),
            eta=blend("eta"),
            eta_r=blend("eta_r"),
            eta_rr=blend("eta_rr"),
            eta_mu=blend("eta_mu"),
            eta_mu_r=blend("eta_mu_r"),
            residual=max(node.residual for node in nodes),
            method="lattice",
        )

    def profile(self, mu: float) -> RadialProfile:
        mu = float(mu)
        self.domain.check(mu)
        return self.profile_unchecked(mu)

    def profile_unchecked(self, mu: float) -> RadialProfile:
        """Profile at μ without the interval check; used for finite differences at the edges."""
        with self._lock:
            cached = self._profiles.get(mu)
            if cached is not None:
                self._profiles.move_to_end(mu)
                return cached
        profile = self._rescaled(mu) if self.scaling else self._interpolated(mu)
        with self._lock:
            profile = self._profiles.setdefault(mu, profile)
            self._profiles.move_to_end(mu)
            while len(self._profiles) > self.max_profiles:
                self._profiles.popitem(last=False)
            return profile

    def evaluate_mu(self, mu: float, r: np.ndarray) -> np.ndarray:
        return self.profile(mu).evaluate_mu(r)

    def second_mu_derivative(self, mu: float, r: np.ndarray, step: Optional[float] = None) -> np.ndarray:
        """∂²_μη(r) by central differences of ∂_μη."""
        delta = step or (SECOND_DERIVATIVE_STEP if self.scaling else self.spacing)
        upper = self.profile_unchecked(mu + delta).evaluate_mu(r)
        lower = self.profile_unchecked(mu - delta).evaluate_mu(r)
        return (upper - lower) / (2.0 * delta)

    def warm(self) -> int:
        """Solve every lattice node the interval can touch; returns the node count."""
        if self.scaling:
            self._node(1)
            return 1
        first = max(1, math.floor(self.domain.mu_min / self.spacing) - 2)
        last = math.floor(self.domain.mu_max / self.spacing) + 3
        for index in range(first, last + 1):
            self._node(index)
        logger.info("Profile cache warmed with %d lattice nodes", last - first + 1)
        return last - first + 1

    def describe(self) -> dict[str, Any]:
        return {
            "mode": "scaling" if self.scaling else "lattice",
            "spacing": None if self.scaling else self.spacing,
            "nodes": len(self._nodes),
            "profiles": len(self._profiles),
            "interval": [self.domain.mu_min, self.domain.mu_max],
        }
