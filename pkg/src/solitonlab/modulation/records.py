from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from ..fields.field import ComplexField
from ..profile.types import SolitonParams

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class ModulationState:
    """σ and the moving-frame fluctuation w = S_σ⁻¹ψ - η_μ at one sample."""

    time: float
    sigma: SolitonParams
    w: ComplexField
    w_l2: float
    w_h1: float
    iterations: int
    constraint_residual: float
    history: tuple[float, ...] = ()


@dataclass(frozen=True)
class AlphaRecord:
    """Modulation-equation residuals at one interior sample, in frame order t, b, g, s."""

    time: float
    alpha: tuple[float, ...]
    rate: tuple[float, ...]
    r_v_norm: float
    delta_x: Optional[tuple[float, ...]] = None
    closure: Optional[float] = None
    bound_constant: Optional[float] = None

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.alpha)))

    def with_delta_x(
        self, delta_x: np.ndarray, closure: float, bound_constant: Optional[float]
    ) -> "AlphaRecord":
        return replace(
            self,
            delta_x=tuple(float(x) for x in delta_x),
            closure=float(closure),
            bound_constant=None if bound_constant is None else float(bound_constant),
        )


@dataclass(frozen=True)
class LyapunovRecord:
    time: float
    delta_e: float
    quadratic_estimate: float
    w_h1: float
    lower_bound_ok: Optional[bool]
    rho_used: Optional[float]


@dataclass
class TrackingResult:
    states: list[ModulationState] = field(default_factory=list)
    alphas: list[AlphaRecord] = field(default_factory=list)
    lyapunov: list[LyapunovRecord] = field(default_factory=list)

    def rows(self) -> list[dict[str, Any]]:
        """One JSON-ready record per sample."""
        alphas = {record.time: record for record in self.alphas}
        gaps = {record.time: record for record in self.lyapunov}
        rows = []
        for state in self.states:
            row: dict[str, Any] = {
                "kind": "modulation",
                "schema_version": SCHEMA_VERSION,
                "t": state.time,
                "sigma": state.sigma.as_dict(),
                "w_l2": state.w_l2,
                "w_h1": state.w_h1,
                "iterations": state.iterations,
                "constraint_residual": state.constraint_residual,
            }
            alpha = alphas.get(state.time)
            if alpha is not None:
                row["alpha"] = list(alpha.alpha)
                row["alpha_sup"] = alpha.sup
                row["delta_x_norm"] = (
                    None if alpha.delta_x is None else float(np.linalg.norm(alpha.delta_x))
                )
                row["closure"] = alpha.closure
            gap = gaps.get(state.time)
            if gap is not None:
                row["delta_e"] = gap.delta_e
                row["delta_e_quadratic"] = gap.quadratic_estimate
                row["lower_bound_ok"] = gap.lower_bound_ok
            rows.append(row)
        return rows
