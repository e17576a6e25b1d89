"""Convergence-order studies: run one config at several parameter values and fit log-log slopes."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from ..core.config import get_settings
from ..core.exceptions import ConfigError, RunStageError, SolitonLabError
from ..core.logging import configure_logging
from .loader import check_config
from .outputs import dumps
from .runner import run_experiment
from .schemas import SCHEMA_VERSION, ExperimentConfig

logger = logging.getLogger(__name__)

PARAMETERS = ("eps_V", "eps_0", "dt")
OBSERVABLES = (
    "deviation_a",
    "deviation_a_checkpoint",
    "alpha_sup",
    "alpha_sup_checkpoint",
    "w_h1_sup",
    "mu_drift",
    "mu_drift_checkpoint",
    "energy_drift",
    "mass_drift",
    "initial_gap",
    "ehrenfest",
)
SPACING_TOLERANCE = 1e-6


@dataclass
class MemberResult:
    value: float
    run_id: Optional[str]
    status: str
    exit_code: int
    observables: dict[str, Optional[float]] = field(default_factory=dict)
    message: str = ""
    stage: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status in ("completed", "certified")


@dataclass
class OrderFit:
    observable: str
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]
    slope_error: Optional[float]
    points: int
    values: list[float]
    measurements: list[Optional[float]]


@dataclass
class OrderReport:
    parameter: str
    values: list[float]
    members: list[MemberResult]
    fits: list[OrderFit]
    schema_version: int = SCHEMA_VERSION

    @property
    def complete(self) -> bool:
        return all(member.ok for member in self.members)

    def fit(self, observable: str) -> OrderFit:
        for item in self.fits:
            if item.observable == observable:
                return item
        raise KeyError(observable)

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "parameter": self.parameter,
            "values": self.values,
            "complete": self.complete,
            "members": [asdict(member) for member in self.members],
            "fits": [asdict(item) for item in self.fits],
        }

    def to_text(self) -> str:
        lines = [f"parameter: {self.parameter}", "values: " + " ".join(f"{v:g}" for v in self.values)]
        for member in self.members:
            if not member.ok:
                lines.append(f"FAILED member {member.value:g}: {member.stage}: {member.message}")
        for item in self.fits:
            if item.slope is None:
                lines.append(f"{item.observable}: no fit ({item.points} usable points)")
                continue
            lines.append(
                f"{item.observable}: order {item.slope:.4f} +/- {item.slope_error or 0.0:.2g}, "
                f"R^2 {item.r_squared:.4f} ({item.points} points)"
            )
        return "\n".join(lines) + "\n"


def check_values(values: Sequence[float]) -> list[float]:
    """At least three positive values in geometric progression, returned sorted."""
    ordered = sorted(float(v) for v in values)
    problems = []
    if len(ordered) < 3:
        problems.append(f"sweep needs at least 3 values, got {len(ordered)}")
    if any(v <= 0 for v in ordered):
        problems.append("sweep values must be positive")
    if not problems:
        ratios = np.diff(np.log(ordered))
        if np.any(ratios <= 0) or np.ptp(ratios) > SPACING_TOLERANCE * max(1.0, float(np.max(ratios))):
            problems.append("sweep values must be geometrically spaced")
    if problems:
        raise ConfigError(problems=problems)
    return ordered


def fit_order(
    observable: str, values: Sequence[float], measurements: Sequence[Optional[float]]
) -> OrderFit:
    """Least-squares slope of log(measurement) against log(value)."""
    pairs = [(v, m) for v, m in zip(values, measurements) if m is not None and m > 0 and math.isfinite(m)]
    base = OrderFit(observable, None, None, None, None, len(pairs), list(values), list(measurements))
    if len(pairs) < 2:
        return base
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residual**2)) / spread if spread > 0 else 1.0
    slope_error = None
    if len(pairs) > 2:
        slope_error = float(
            np.sqrt(np.sum(residual**2) / (len(pairs) - 2) / np.sum((x - x.mean()) ** 2))
        )
    base.slope, base.intercept = float(slope), float(intercept)
    base.r_squared, base.slope_error = r_squared, slope_error
    return base


def _run_member(payload: dict[str, Any], value: float, output_root: str) -> MemberResult:
    config = ExperimentConfig.model_validate(payload)
    try:
        summary = run_experiment(config, output_root=output_root)
    except RunStageError as exc:
        return MemberResult(
            value=value,
            run_id=None,
            status="failed",
            exit_code=exc.exit_code,
            message=str(exc.cause),
            stage=exc.stage,
        )
    except (SolitonLabError, OSError) as exc:
        # Failures outside a stage: run directory, summary or stream writes.
        logger.exception("Sweep member %g failed outside the pipeline", value)
        return MemberResult(
            value=value,
            run_id=None,
            status="failed",
            exit_code=getattr(exc, "exit_code", 4),
            message=str(exc),
            stage="outputs",
        )
    return MemberResult(
        value=value,
        run_id=summary.run_id,
        status=summary.status,
        exit_code=summary.exit_code,
        observables=summary.observables,
    )


def _member_configs(base: ExperimentConfig, parameter: str, values: Sequence[float]) -> list[ExperimentConfig]:
    """Every member passes the same checks as a loaded config, or none of them runs."""
    configs: list[ExperimentConfig] = []
    problems: list[str] = []
    for value in values:
        label = f"{parameter}={value:g}: "
        try:
            configs.append(check_config(base.with_value(parameter, value), label=label))
        except ConfigError as exc:
            problems.extend(exc.problems)
        except ValidationError as exc:
            problems.extend(f"{label}{error['msg']}" for error in exc.errors())
    if problems:
        raise ConfigError(problems=problems)
    return configs


def sweep_orders(
    base: ExperimentConfig,
    parameter: str,
    values: Sequence[float],
    observables: Sequence[str] = OBSERVABLES,
    *,
    workers: Optional[int] = None,
    output_root: Optional[str | Path] = None,
) -> OrderReport:
    """Run every member concurrently and fit one order per observable.

    Failed members are flagged in the report and left out of the fits.
    """
    if parameter not in PARAMETERS:
        raise ConfigError(problems=[f"parameter: must be one of {', '.join(PARAMETERS)}"])
    unknown = [name for name in observables if name not in OBSERVABLES]
    if unknown:
        raise ConfigError(problems=[f"observables: unknown {', '.join(unknown)}"])
    ordered = check_values(values)
    settings = get_settings()
    root = str(output_root or base.run.output or settings.output_root)
    configs = _member_configs(base, parameter, ordered)
    workers = max(1, min(workers or settings.workers, len(configs)))
    logger.info("Sweep over %s=%s with %d workers", parameter, ordered, workers)

    if workers == 1:
        members = [_run_member(c.model_dump(), v, root) for c, v in zip(configs, ordered)]
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=configure_logging, initargs=(settings.log_level,)
        ) as pool:
            futures = [pool.submit(_run_member, c.model_dump(), v, root) for c, v in zip(configs, ordered)]
            members = [future.result() for future in futures]
    for member in members:
        if not member.ok:
            logger.warning("Sweep member %s=%g failed: %s", parameter, member.value, member.message)

    fits = [
        fit_order(name, ordered, [m.observables.get(name) if m.ok else None for m in members])
        for name in observables
    ]
    report = OrderReport(parameter=parameter, values=ordered, members=members, fits=fits)
    directory = Path(root) / f"sweep-{parameter}"
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "orders.json").write_text(dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    (directory / "orders.txt").write_text(report.to_text(), encoding="utf-8")
    logger.info("Sweep report written to %s", directory)
    return report
