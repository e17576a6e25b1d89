from __future__ import annotations

import time

from prometheus_client import CONTENT_TYPE_LATEST, Counter, Histogram, generate_latest

REQUEST_COUNTER = Counter(
    "api_requests_total",
    "Count of HTTP requests",
    labelnames=("path", "method", "status"),
)
REQUEST_LATENCY = Histogram(
    "api_request_latency_seconds",
    "Latency for HTTP requests",
    labelnames=("path", "method"),
)
STAGE_RUNS = Counter(
    "pipeline_stage_runs_total",
    "Experiment pipeline stages by outcome",
    labelnames=("stage", "status"),
)
STAGE_LATENCY = Histogram(
    "pipeline_stage_latency_seconds",
    "Wall time per pipeline stage",
    labelnames=("stage",),
    buckets=(0.01, 0.1, 0.5, 1.0, 5.0, 15.0, 60.0, 300.0, 900.0),
)
PROFILE_SOLVES = Counter(
    "profile_solves_total",
    "Solitary-wave profile solves",
    labelnames=("method",),
)
EIGENSOLVES = Counter(
    "eigensolves_total",
    "Eigenproblems solved",
    labelnames=("domain",),
)
CERTIFICATE_FAILURES = Counter(
    "certificate_failures_total",
    "Failed analytic or spectral certificates",
    labelnames=("condition",),
)
INTEGRATOR_STEPS = Counter(
    "integrator_steps_total",
    "Split-step integrator steps taken",
)
NEWTON_ITERATIONS = Histogram(
    "decomposition_newton_iterations",
    "Newton iterations per skew-orthogonal decomposition",
    buckets=(0, 1, 2, 3, 5, 8, 13, 21, 50),
)


def record_stage(stage: str, status: str) -> None:
    STAGE_RUNS.labels(stage=stage, status=status).inc()


def record_profile_solve(method: str) -> None:
    PROFILE_SOLVES.labels(method=method).inc()


def record_eigensolve(domain: str) -> None:
    EIGENSOLVES.labels(domain=domain).inc()


def record_certificate_failure(condition: str) -> None:
    CERTIFICATE_FAILURES.labels(condition=condition).inc()


def record_integrator_steps(amount: int) -> None:
    if amount <= 0:
        return
    INTEGRATOR_STEPS.inc(amount)


def record_newton_iterations(count: int) -> None:
    NEWTON_ITERATIONS.observe(count)


def record_request(path: str, method: str, status: int, seconds: float) -> None:
    REQUEST_COUNTER.labels(path=path, method=method, status=str(status)).inc()
    REQUEST_LATENCY.labels(path=path, method=method).observe(seconds)


def metrics_response() -> tuple[bytes, str]:
    payload = generate_latest()
    return payload, CONTENT_TYPE_LATEST


class StageTimer:
    def __init__(self, stage: str) -> None:
        self.stage = stage
        self.start = time.perf_counter()

    def observe(self) -> float:
        duration = time.perf_counter() - self.start
        STAGE_LATENCY.labels(stage=self.stage).observe(duration)
        return duration
