from __future__ import annotations

from typing import Any, Dict, Optional

from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from ..core import debug as core_debug
from ..core.config import Settings, get_settings
from ..core.exceptions import CertificationError, ConfigError, NumericalError, RunStageError
from ..harness.loader import parse_config
from ..harness.runner import run_experiment
from ..harness.schemas import NonlinearityBlock
from ..linearization.operators import assemble_operators
from ..linearization.spectrum import spectral_report
from ..profile.family import profile_mass, profile_mass_slope
from ..profile.solver import solve_profile

router = APIRouter()


class ProfileRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nonlinearity: NonlinearityBlock = Field(default_factory=NonlinearityBlock)
    mu: float = 1.0
    dimension: int = 1


class SpectrumRequest(ProfileRequest):
    k_max: Optional[int] = None


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: Dict[str, Any] = Field(default_factory=dict)
    strict: bool = True


def _http_error(exc: Exception) -> HTTPException:
    cause = exc.cause if isinstance(exc, RunStageError) else exc
    if isinstance(cause, ConfigError):
        return HTTPException(status_code=422, detail={"message": str(cause), "problems": cause.problems})
    if isinstance(cause, CertificationError):
        return HTTPException(status_code=409, detail={"message": str(exc), "condition": cause.condition})
    if isinstance(cause, (NumericalError, RunStageError)):
        return HTTPException(status_code=500, detail={"message": str(exc)})
    return HTTPException(status_code=400, detail={"message": str(exc)})


def _validate_request(payload: ProfileRequest) -> None:
    if payload.dimension not in (1, 2):
        raise HTTPException(status_code=422, detail="dimension must be 1 or 2")
    if payload.mu <= 0:
        raise HTTPException(status_code=422, detail="mu must be positive")


@router.post("/profile", tags=["profile"])
def profile(payload: ProfileRequest, settings: Settings = Depends(get_settings)) -> Dict[str, Any]:
    _validate_request(payload)
    try:
        spec = payload.nonlinearity.build()
        result = solve_profile(
            spec,
            payload.mu,
            payload.dimension,
            radial_points=settings.radial_points,
            plane_points=settings.plane_points,
        )
    except (NumericalError, ValueError) as exc:
        raise _http_error(exc) from exc
    return {
        "status": "ok",
        "profile": result.summary(),
        "mass": profile_mass(result),
        "mass_slope": profile_mass_slope(result) if result.has_mu_derivative else None,
    }


@router.post("/spectrum", tags=["spectrum"])
def spectrum(payload: SpectrumRequest, settings: Settings = Depends(get_settings)) -> Dict[str, Any]:
    _validate_request(payload)
    try:
        spec = payload.nonlinearity.build()
        result = solve_profile(
            spec,
            payload.mu,
            payload.dimension,
            radial_points=settings.radial_points,
            plane_points=settings.plane_points,
        )
        operators = assemble_operators(
            result,
            spec,
            payload.k_max,
            dvr_points=settings.dvr_points,
            plane_points=settings.plane_points,
        )
        report = spectral_report(operators, result)
    except (NumericalError, ValueError) as exc:
        raise _http_error(exc) from exc
    return {"status": "ok" if report.passed else "failed", "report": report.as_dict()}


@router.post("/runs", tags=["runs"])
def create_run(payload: RunRequest, settings: Settings = Depends(get_settings)) -> Dict[str, Any]:
    try:
        config = parse_config(payload.config, strict=payload.strict)
        summary = run_experiment(config, settings=settings)
    except (ConfigError, RunStageError) as exc:
        raise _http_error(exc) from exc
    return {"status": "ok", "summary": summary.as_dict()}


@router.get("/debug/trace/{run_id}", tags=["debug"])
def debug_trace(run_id: str) -> Dict[str, Any]:
    trace = core_debug.get_trace(run_id)
    if not trace:
        raise HTTPException(status_code=404, detail="Trace not found")
    return trace
