from __future__ import annotations

import contextlib
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional

from opentelemetry import trace

from ..core import debug as core_debug
from ..core import metrics as core_metrics
from ..core.config import Settings, get_settings
from ..core.exceptions import CertificationError, NumericalError, RunStageError
from ..effective.compare import DeviationReport, compare_trajectories
from ..effective.newton import newton_flow
from ..evolve.monitor import integrated_ehrenfest, invariant_monitor
from ..evolve.runner import Trajectory, evolve_run
from ..evolve.snapshots import SnapshotWriter
from ..fields import spectral
from ..fields.field import ComplexField
from ..linearization.coercivity import coercivity
from ..linearization.operators import assemble_operators
from ..linearization.spectrum import SpectralReport, spectral_report
from ..linearization.symplectic import omega_matrix
from ..model.conditions import ConditionReport, verify_conditions
from ..model.nonlinearity import Nonlinearity
from ..model.potential import PotentialSpec
from ..modulation.lyapunov import attach_lyapunov, energy_drift
from ..modulation.records import TrackingResult
from ..modulation.residuals import close_alpha_records
from ..modulation.tracking import Tracker
from ..profile.cache import ProfileCache
from ..profile.family import MassCurve, mass_curve, tangent_frame
from ..profile.solver import export_profile
from ..profile.types import RadialProfile, SolitonParams
from .initial import initial_distance, initial_field
from .loader import resolved_config, run_id
from .outputs import JsonLinesWriter, RunDirectory
from .schemas import SCHEMA_VERSION, ExperimentConfig

logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    run_id: str
    run_name: str
    output_dir: str
    status: str = "running"
    stage: str = "setup"
    exit_code: int = 0
    message: str = ""
    conditions: dict[str, Any] = field(default_factory=dict)
    mass_curve: dict[str, Any] = field(default_factory=dict)
    spectrum: dict[str, Any] = field(default_factory=dict)
    t_end: float = 0.0
    horizon_reached: float = 0.0
    samples: int = 0
    initial_distance: Optional[float] = None
    observables: dict[str, Optional[float]] = field(default_factory=dict)
    deviation: dict[str, Any] = field(default_factory=dict)
    lyapunov_lower_bound: Optional[bool] = None
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class _Context:
    config: ExperimentConfig
    settings: Settings
    directory: RunDirectory
    summary: RunSummary
    spec: Nonlinearity
    potential: PotentialSpec
    sigma0: SolitonParams
    cache: Optional[ProfileCache] = None
    profile: Optional[RadialProfile] = None
    report: Optional[SpectralReport] = None


class _SampleStream:
    """Writes one crash-safe record per tracked sample while the run is live."""

    def __init__(self, tracker: Tracker, stream: JsonLinesWriter) -> None:
        self.tracker = tracker
        self.stream = stream

    def __call__(self, time: float, psi: ComplexField) -> None:
        state = self.tracker.states[-1]
        self.stream.write(
            {
                "kind": "sample",
                "schema_version": SCHEMA_VERSION,
                "t": time,
                "sigma": state.sigma.as_dict(),
                "w_l2": state.w_l2,
                "w_h1": state.w_h1,
                "constraint_residual": state.constraint_residual,
                "mass": spectral.l2_squared(psi.values, psi.grid),
            }
        )


@contextlib.contextmanager
def _stage(name: str, context: _Context) -> Iterator[trace.Span]:
    tracer = trace.get_tracer(__name__)
    timer = core_metrics.StageTimer(name)
    context.summary.stage = name
    with tracer.start_as_current_span(name) as span:
        span.set_attribute("run_id", context.summary.run_id)
        span.set_attribute("mu", context.sigma0.mu)
        span.set_attribute("dimension", context.config.dimension)
        span.set_attribute("eps_v", context.potential.eps_v)
        try:
            yield span
        except Exception as exc:
            core_metrics.record_stage(name, "failed")
            core_debug.record_stage(context.summary.run_id, name, "failed", timer.observe())
            raise RunStageError(name, exc, context.directory.written) from exc
        core_metrics.record_stage(name, "ok")
        seconds = timer.observe()
        core_debug.record_stage(context.summary.run_id, name, "ok", seconds)
        logger.info("Stage %s finished in %.2fs", name, seconds)


def _solver_options(config: ExperimentConfig, settings: Settings) -> dict[str, int]:
    return {
        "radial_points": config.spectrum.radial_points or settings.radial_points,
        "plane_points": config.spectrum.plane_points or settings.plane_points,
    }


def _conditions(context: _Context) -> ConditionReport:
    report = verify_conditions(context.spec, context.config.dimension, context.sigma0.mu)
    context.summary.conditions = report.as_dict()
    context.directory.write_text("conditions.txt", report.to_text())
    failures = report.failures()
    if failures:
        raise CertificationError(
            f"condition {failures[0].name} failed: {failures[0].detail}", condition=failures[0].name
        )
    return report


def _profile(context: _Context) -> tuple[RadialProfile, MassCurve]:
    config = context.config
    options = _solver_options(config, context.settings)
    context.cache = ProfileCache(
        context.spec, config.dimension, config.parameters.build(), **options
    )
    profile = context.cache.profile(context.sigma0.mu)
    context.profile = profile
    export_profile(profile, context.directory.file("profile.txt"), context.spec)
    context.directory.record(context.directory.file("profile.txt"))
    mus = config.spectrum.mass_points or sorted(
        {config.parameters.mu_min, context.sigma0.mu, config.parameters.mu_max}
    )
    profiles = [context.cache.profile(mu) for mu in mus]
    curve = mass_curve(context.spec, mus, config.dimension, profiles=profiles)
    context.summary.mass_curve = curve.as_dict()
    if not curve.stable:
        raise CertificationError("mass curve has m' <= 0 on the interval", condition="orbital_stability")
    return profile, curve


def _spectrum(context: _Context, stream: JsonLinesWriter) -> SpectralReport:
    assert context.profile is not None
    config, settings, profile = context.config, context.settings, context.profile
    operators = assemble_operators(
        profile,
        context.spec,
        config.spectrum.k_max,
        dvr_points=config.spectrum.dvr_points or settings.dvr_points,
        plane_points=config.spectrum.plane_points or settings.plane_points,
    )
    report = spectral_report(operators, profile)
    context.report = report
    if not report.passed:
        context.directory.write_text("spectrum.txt", report.to_text())
        raise CertificationError("; ".join(report.findings) or "null-space condition failed", condition="null_space")
    frame = tangent_frame(profile, SolitonParams.at_rest(profile.mu, profile.dimension), operators.grid)
    report.attach_symplectic(omega_matrix(frame))
    result = coercivity(operators, frame, profile)
    report.attach_coercivity(result.rho, result.unconstrained)
    context.directory.write_text("spectrum.txt", report.to_text())
    context.summary.spectrum = {
        "negative_counts": report.negative_counts,
        "zero_counts": report.zero_counts,
        "lowest": report.lowest,
        "rho": report.rho,
        "condition_f": report.condition_f,
        "mu_identity": report.mu_identity,
    }
    stream.write(report.summary_row())
    return report


def _evolve(
    context: _Context, stream: JsonLinesWriter
) -> tuple[Trajectory, TrackingResult, ComplexField]:
    assert context.profile is not None and context.cache is not None
    config = context.config
    grid = config.grid.build()
    psi0, _ = initial_field(config, context.profile, grid)
    context.summary.initial_distance = initial_distance(psi0, context.profile, config)
    tracking = config.tracking
    tracker = Tracker(
        context.sigma0,
        context.cache,
        context.potential,
        max_iterations=tracking.max_iterations,
        tolerance=tracking.tolerance,
        trust_factor=tracking.trust_factor,
    )
    observers: list[Any] = [tracker, _SampleStream(tracker, stream)]
    with contextlib.ExitStack() as stack:
        if config.evolution.snapshots:
            snapshots = stack.enter_context(SnapshotWriter(context.directory.file("snapshots.bin")))
            context.directory.record(snapshots.path)
            observers.append(snapshots)
        trajectory = evolve_run(psi0, config.evolution_config(), context.potential, context.spec, observers)
    return trajectory, tracker.result(), psi0


def _observables(
    context: _Context,
    trajectory: Trajectory,
    result: TrackingResult,
    deviation: DeviationReport,
    ehrenfest: Optional[float],
) -> dict[str, Optional[float]]:
    checkpoint = context.config.evolution.checkpoint
    alphas = [record.sup for record in result.alphas]
    early = [record.sup for record in result.alphas if checkpoint is None or record.time <= checkpoint]
    gaps = result.lyapunov
    return {
        "deviation_a": deviation.position,
        "deviation_a_checkpoint": deviation.position_checkpoint,
        "deviation_v": deviation.velocity,
        "deviation_gamma": deviation.phase_wrapped,
        "alpha_sup": max(alphas) if alphas else None,
        "alpha_sup_checkpoint": max(early) if early and checkpoint is not None else None,
        "closure_sup": max((r.closure or 0.0 for r in result.alphas), default=None),
        "w_h1_sup": max(state.w_h1 for state in result.states),
        "mu_drift": deviation.frequency,
        "mu_drift_checkpoint": deviation.frequency_checkpoint,
        "energy_drift": trajectory.drift("energy"),
        "mass_drift": trajectory.drift("mass"),
        "lyapunov_drift": energy_drift(gaps),
        "initial_gap": abs(gaps[0].delta_e) if gaps else None,
        "ehrenfest": ehrenfest,
    }


def run_experiment(
    config: ExperimentConfig,
    *,
    output_root: Optional[str | Path] = None,
    settings: Optional[Settings] = None,
) -> RunSummary:
    """Certify, evolve, track and compare one configuration, writing every artifact.

    A stage failure is re-raised as ``RunStageError`` after ``summary.json``
    records the failed stage and exit code.
    """
    settings = settings or get_settings()
    identifier = run_id(config)
    root = output_root or config.run.output or settings.output_root
    directory = RunDirectory(root, config.run.name, identifier).prepare()
    summary = RunSummary(run_id=identifier, run_name=config.run.name, output_dir=str(directory.path))
    context = _Context(
        config=config,
        settings=settings,
        directory=directory,
        summary=summary,
        spec=config.build_nonlinearity(),
        potential=config.build_potential(),
        sigma0=config.sigma0(),
    )
    started = time.perf_counter()
    core_debug.start_trace(identifier)
    directory.write_json("config.resolved.json", resolved_config(config))
    summary.t_end = config.t_end()
    logger.info("Run %s (%s) writing to %s", config.run.name, identifier[:12], directory.path)

    try:
        with directory.stream() as stream:
            with _stage("conditions", context):
                _conditions(context)
            with _stage("profile", context):
                _profile(context)
            with _stage("spectrum", context):
                report = _spectrum(context, stream)
            if summary.t_end == 0:
                summary.status = "certified"
            else:
                with _stage("evolve", context):
                    trajectory, result, _ = _evolve(context, stream)
                summary.horizon_reached = trajectory.final_time
                summary.samples = len(result.states)
                with _stage("modulation", context):
                    assert context.cache is not None
                    close_alpha_records(result, context.potential, context.spec, context.cache)
                    attach_lyapunov(result, context.spec, context.cache, report.rho)
                    stream.extend(result.rows())
                    ehrenfest: Optional[float] = None
                    if len(trajectory.moments) >= 3:
                        records = list(invariant_monitor(trajectory, context.potential))
                        stream.extend(record.as_row() for record in records)
                        ehrenfest = integrated_ehrenfest(records)
                    judged = [g.lower_bound_ok for g in result.lyapunov if g.lower_bound_ok is not None]
                    summary.lyapunov_lower_bound = all(judged) if judged else None
                with _stage("effective", context):
                    effective = newton_flow(
                        context.sigma0,
                        context.potential,
                        trajectory.final_time,
                        config.evolution.dt,
                    )
                    directory.record(effective.to_csv(directory.file("effective.csv")))
                    deviation = compare_trajectories(
                        result.states, effective, context.potential, checkpoint=config.evolution.checkpoint
                    )
                    directory.record(deviation.write(directory.file("deviation.txt")))
                    summary.deviation = deviation.as_dict()
                    summary.observables = _observables(context, trajectory, result, deviation, ehrenfest)
                summary.status = "completed"
    except RunStageError as exc:
        summary.status = "failed"
        summary.exit_code = exc.exit_code
        summary.message = str(exc)
        if isinstance(exc.cause, CertificationError):
            summary.status = "not_certified"
        elif isinstance(exc.cause, NumericalError):
            partial = getattr(exc.cause, "trajectory", None)
            if partial is not None:
                summary.horizon_reached = partial.final_time
        logger.error("Run %s failed in stage %s: %s", identifier[:12], exc.stage, exc.cause)
        raise
    finally:
        summary.wall_time = time.perf_counter() - started
        directory.write_json("summary.json", summary.as_dict())
        core_debug.record_trace(identifier, {"summary": summary.as_dict()})

    logger.info(
        "Run %s %s: horizon %.4g, sup|a-a_N|=%s",
        identifier[:12],
        summary.status,
        summary.horizon_reached,
        summary.observables.get("deviation_a"),
    )
    return summary


def certify(config: ExperimentConfig, **options: Any) -> RunSummary:
    """Run only the certification stages (t_end = 0)."""
    data = config.model_dump()
    data["evolution"]["t_end"] = 0.0
    data["evolution"]["checkpoint"] = None
    return run_experiment(ExperimentConfig.model_validate(data), **options)

