from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..core.exceptions import CertificationError
from ..fields import spectral
from ..profile.family import TangentFrame

logger = logging.getLogger(__name__)

DEGENERACY_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    """Ω_jk = ω(z_j, z_k) = Im∫z_j conj(z_k) on the tangent frame, with its inverse."""

    matrix: np.ndarray
    inverse: np.ndarray
    labels: tuple[str, ...]
    mass: float
    mass_slope: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix + self.matrix.T)))

    def inverse_residual(self) -> float:
        return float(np.max(np.abs(self.inverse @ self.matrix - np.eye(self.size))))

    def as_dict(self) -> dict[str, Any]:
        return {
            "labels": list(self.labels),
            "matrix": self.matrix.tolist(),
            "inverse": self.inverse.tolist(),
            "m": self.mass,
            "m_prime": self.mass_slope,
        }


def omega_matrix(frame: TangentFrame) -> SymplecticForm:
    fields = frame.fields
    size = len(fields)
    grid = frame.grid
    matrix = np.zeros((size, size))
    for j in range(size):
        for k in range(j + 1, size):
            value = spectral.symplectic_values(fields[j].values, fields[k].values, grid)
            matrix[j, k] = value
            matrix[k, j] = -value
    d = grid.dimension
    mass = float(np.mean([-matrix[i, d + i] for i in range(d)]))
    mass_slope = float(matrix[2 * d, 2 * d + 1])
    if abs(mass_slope) < DEGENERACY_THRESHOLD:
        raise CertificationError(
            f"degenerate symplectic form: m'={mass_slope:.3e}", condition="orbital_stability"
        )
    inverse = np.linalg.inv(matrix)
    form = SymplecticForm(matrix, inverse, frame.labels, mass, mass_slope)
    if form.inverse_residual() > 1e-8:
        raise CertificationError(
            f"symplectic inverse inaccurate ({form.inverse_residual():.2e})", condition="orbital_stability"
        )
    logger.debug("Symplectic form: m=%.10g m'=%.10g", mass, mass_slope)
    return form
