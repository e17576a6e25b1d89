"""Coercivity of 𝓛 on the skew-orthogonal complement of the tangent space.

ρ = min ⟨w, 𝓛w⟩ / ||w||²_{H¹} over w with ω(w, z_j) = 0 for every frame
vector. At σ = (0, 0, 0, μ) the constraints split into the blocks:

    Re w ⊥ η, x_k η      Im w ⊥ ∂_kη, ∂_μη

so each radial sector carries at most one constraint, removed by a
Householder reflection before a generalized symmetric eigensolve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh
from scipy.sparse.linalg import LinearOperator

from ..core.exceptions import CertificationError, EigenSolverError
from ..fields import spectral
from ..profile.family import TangentFrame
from ..profile.types import RadialProfile
from .operators import DiscretizedOperator, OperatorSet
from .spectrum import grid_eigenpairs

logger = logging.getLogger(__name__)


@dataclass
class CoercivityResult:
    rho: float
    unconstrained: float
    method: str
    sectors: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "unconstrained": self.unconstrained,
            "method": self.method,
            "sectors": self.sectors,
        }


def complement_basis(constraint: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of one vector, from a Householder reflection."""
    unit = constraint / np.linalg.norm(constraint)
    pivot = np.zeros_like(unit)
    pivot[0] = 1.0
    sign = 1.0 if unit[0] >= 0 else -1.0
    normal = unit + sign * pivot
    normal /= np.linalg.norm(normal)
    reflection = np.eye(unit.size) - 2.0 * np.outer(normal, normal)
    return reflection[:, 1:]


def _smallest_generalized(matrix: np.ndarray, gram: np.ndarray, label: str) -> float:
    try:
        values = eigh(matrix, gram, eigvals_only=True, subset_by_index=[0, 0])
    except LinAlgError as exc:
        raise EigenSolverError(f"generalized eigensolve failed for {label}: {exc}") from exc
    return float(values[0])


def _sector_constraint(operator: DiscretizedOperator, profile: RadialProfile) -> Optional[np.ndarray]:
    assert operator.bessel is not None
    r = operator.bessel.points
    samples = {
        ("L1", 0): lambda: profile.evaluate(r),
        ("L1", 1): lambda: r * profile.evaluate(r),
        ("L2", 0): lambda: profile.evaluate_mu(r),
        ("L2", 1): lambda: profile.evaluate_slope(r),
    }.get((operator.name, operator.sector))
    if samples is None:
        return None
    return operator.bessel.coefficients(samples())


def _radial_coercivity(operators: OperatorSet, profile: RadialProfile) -> CoercivityResult:
    constrained: dict[str, float] = {}
    unconstrained = np.inf
    for name in ("L1", "L2"):
        for operator in operators.sectors(name):
            assert operator.matrix is not None
            gram = operator.gram()
            unconstrained = min(unconstrained, _smallest_generalized(operator.matrix, gram, operator.label))
            constraint = _sector_constraint(operator, profile)
            if constraint is None:
                value = _smallest_generalized(operator.matrix, gram, operator.label)
            else:
                basis = complement_basis(constraint)
                value = _smallest_generalized(
                    basis.T @ operator.matrix @ basis, basis.T @ gram @ basis, operator.label
                )
            constrained[operator.label] = value
    return CoercivityResult(min(constrained.values()), float(unconstrained), "radial", constrained)


def _gram_operator(operators: OperatorSet) -> LinearOperator:
    operator = operators.full["L1"]
    return LinearOperator((operator.size, operator.size), matvec=operator.apply_gram, dtype=float)


def _grid_coercivity(operators: OperatorSet, frame: TangentFrame) -> CoercivityResult:
    grid = operators.grid
    gram = _gram_operator(operators)
    inverse_gram = 1.0 / (1.0 + grid.k_squared)
    blocks = {
        "L1": [z.values.imag for z in frame.fields],
        "L2": [z.values.real for z in frame.fields],
    }
    constrained: dict[str, float] = {}
    unconstrained = np.inf
    for name, candidates in blocks.items():
        columns = [c for c in candidates if np.max(np.abs(c)) > 0]
        # lobpcg keeps iterates Gram-orthogonal to Y, so Y = G⁻¹c imposes ⟨w, c⟩ = 0.
        constraints = np.column_stack(
            [spectral.apply_symbol(c, inverse_gram).ravel() for c in columns]
        )
        operator = operators.full[name]
        values, _ = grid_eigenpairs(operator, 2, gram=gram, constraints=constraints, seed=1)
        constrained[name] = float(values[0])
        free, _ = grid_eigenpairs(operator, 2, gram=gram, seed=2)
        unconstrained = min(unconstrained, float(free[0]))
    return CoercivityResult(min(constrained.values()), float(unconstrained), "grid", constrained)


def coercivity(
    operators: OperatorSet, frame: TangentFrame, profile: Optional[RadialProfile] = None
) -> CoercivityResult:
    """Constrained minimum ρ of the H¹-normalized quadratic form; ρ ≤ 0 is an error."""
    profile = profile or operators.profile
    if any(abs(x) > 0 for x in (*frame.sigma.a, *frame.sigma.v, frame.sigma.gamma)):
        raise ValueError("coercivity is evaluated on the frame at a = v = 0, gamma = 0")
    result = _radial_coercivity(operators, profile) if operators.has_radial else _grid_coercivity(operators, frame)
    logger.info(
        "Coercivity: rho=%.10g unconstrained=%.10g method=%s", result.rho, result.unconstrained, result.method
    )
    if result.rho <= 0:
        raise CertificationError(f"coercivity failed: rho={result.rho:.3e}", condition="coercivity")
    return result
