"""Spectral certificate for the linearized operator.

The null-space condition holds when L₁ has its only zero modes in the
translation sector (k = 1) and L₂ vanishes only on η. Local nonlinearities
are checked sector by sector on the Bessel grids, convolution terms on the
periodic analysis grid with a preconditioned LOBPCG.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh, solve
from scipy.sparse.linalg import LinearOperator, gmres, lobpcg

from ..core import metrics as core_metrics
from ..core.exceptions import CertificationError, EigenSolverError, NumericalError
from ..fields import spectral
from ..profile.family import profile_mass_slope, tangent_frame
from ..profile.types import RadialProfile, SolitonParams
from .operators import DiscretizedOperator, OperatorSet

logger = logging.getLogger(__name__)

EIGENVALUE_COUNT = 6
ZERO_TOLERANCE = 1e-5
OVERLAP_THRESHOLD = 0.999
SCHEMA_VERSION = 1


@dataclass
class SpectralReport:
    mu: float
    dimension: int
    domain: str
    eigenvalues: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    lowest: dict[str, list[float]] = field(default_factory=dict)
    negative_counts: dict[str, int] = field(default_factory=dict)
    zero_counts: dict[str, int] = field(default_factory=dict)
    zero_overlaps: dict[str, list[float]] = field(default_factory=dict)
    null_residuals: dict[str, float] = field(default_factory=dict)
    algebra_residuals: dict[str, float] = field(default_factory=dict)
    mu_identity: dict[str, float] = field(default_factory=dict)
    sector_minima: list[float] = field(default_factory=list)
    condition_f: str = "fail"
    findings: list[str] = field(default_factory=list)
    omega: Optional[np.ndarray] = None
    omega_inverse: Optional[np.ndarray] = None
    rho: Optional[float] = None
    rho_unconstrained: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.condition_f == "pass"

    def attach_symplectic(self, form: Any) -> None:
        self.omega = form.matrix
        self.omega_inverse = form.inverse

    def attach_coercivity(self, rho: float, unconstrained: Optional[float] = None) -> None:
        if not self.passed:
            raise CertificationError(
                "coercivity is only defined once the null-space condition passes",
                condition="null_space",
            )
        self.rho = float(rho)
        self.rho_unconstrained = None if unconstrained is None else float(unconstrained)

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "mu": self.mu,
            "dimension": self.dimension,
            "domain": self.domain,
            "condition_f": self.condition_f,
            "findings": list(self.findings),
            "eigenvalues": self.eigenvalues,
            "lowest": self.lowest,
            "negative_counts": self.negative_counts,
            "zero_counts": self.zero_counts,
            "zero_overlaps": self.zero_overlaps,
            "null_residuals": self.null_residuals,
            "algebra_residuals": self.algebra_residuals,
            "mu_identity": self.mu_identity,
            "sector_minima": self.sector_minima,
            "omega": None if self.omega is None else self.omega.tolist(),
            "omega_inverse": None if self.omega_inverse is None else self.omega_inverse.tolist(),
            "rho": self.rho,
            "rho_unconstrained": self.rho_unconstrained,
        }

    def summary_row(self) -> dict[str, Any]:
        return {
            "kind": "spectrum",
            "schema_version": SCHEMA_VERSION,
            "mu": self.mu,
            "condition_f": self.condition_f,
            "negative_L1": self.negative_counts.get("L1"),
            "negative_L2": self.negative_counts.get("L2"),
            "lowest_L1": self.lowest.get("L1", [None])[0],
            "lowest_L2": self.lowest.get("L2", [None])[0],
            "rho": self.rho,
        }

    def to_text(self) -> str:
        lines = [
            f"mu: {self.mu:.17g}",
            f"dimension: {self.dimension}",
            f"domain: {self.domain}",
            f"condition_f: {self.condition_f.upper()}",
        ]
        for name in sorted(self.lowest):
            values = " ".join(f"{value:.12g}" for value in self.lowest[name])
            lines.append(f"lowest_{name}: {values}")
            lines.append(f"negative_{name}: {self.negative_counts.get(name)}")
            lines.append(f"zero_{name}: {self.zero_counts.get(name)}")
        for key, value in {**self.null_residuals, **self.algebra_residuals}.items():
            lines.append(f"residual_{key}: {value:.3e}")
        for key, value in self.mu_identity.items():
            lines.append(f"mu_identity_{key}: {value:.12g}")
        if self.sector_minima:
            lines.append("sector_minima: " + " ".join(f"{v:.12g}" for v in self.sector_minima))
        if self.omega is not None:
            for row in self.omega:
                lines.append("omega: " + " ".join(f"{v: .10g}" for v in row))
        if self.rho is not None:
            lines.append(f"rho: {self.rho:.12g}")
        if self.rho_unconstrained is not None:
            lines.append(f"rho_unconstrained: {self.rho_unconstrained:.12g}")
        for finding in self.findings:
            lines.append(f"finding: {finding}")
        return "\n".join(lines) + "\n"


# -- eigensolvers --------------------------------------------------------


def dense_eigenpairs(operator: DiscretizedOperator, count: int = EIGENVALUE_COUNT) -> tuple[np.ndarray, np.ndarray]:
    assert operator.matrix is not None
    count = min(count, operator.size)
    try:
        values, vectors = eigh(operator.matrix, subset_by_index=[0, count - 1])
    except LinAlgError as exc:
        raise EigenSolverError(f"dense eigensolve failed for {operator.label}: {exc}") from exc
    core_metrics.record_eigensolve("radial")
    return values, vectors


def grid_preconditioner(operator: DiscretizedOperator) -> LinearOperator:
    grid = operator.grid
    assert grid is not None
    inverse_symbol = 1.0 / (operator.mu + grid.k_squared)

    def apply(vector: np.ndarray) -> np.ndarray:
        return spectral.apply_symbol(np.asarray(vector).reshape(grid.shape), inverse_symbol).ravel()

    return LinearOperator((grid.size, grid.size), matvec=apply, dtype=float)


def grid_eigenpairs(
    operator: DiscretizedOperator,
    count: int = EIGENVALUE_COUNT,
    *,
    seed: int = 0,
    tol: float = 1e-9,
    maxiter: int = 2000,
    constraints: Optional[np.ndarray] = None,
    gram: Optional[LinearOperator] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenpairs of a grid operator, optionally generalized and constrained.

    ``constraints`` are columns the iterates must stay orthogonal to in the
    Gram product, as in :func:`scipy.sparse.linalg.lobpcg`.
    """
    grid = operator.grid
    assert grid is not None
    rng = np.random.default_rng(seed)
    envelope = np.exp(-0.25 * operator.mu * grid.radius**2).ravel()
    start = rng.standard_normal((grid.size, count)) * envelope[:, None]
    values, vectors, history = lobpcg(
        operator.as_linear_operator(),
        start,
        B=gram,
        M=grid_preconditioner(operator),
        Y=constraints,
        largest=False,
        tol=tol,
        maxiter=maxiter,
        retResidualNormsHistory=True,
    )
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    trace = [float(np.max(step)) for step in history]
    for value, vector in zip(values, vectors.T):
        if value > 0.5 * operator.mu:
            continue
        applied = operator.apply(vector)
        target = gram.matvec(vector) if gram is not None else vector
        scale = float(np.linalg.norm(target))
        if np.linalg.norm(applied - value * target) > 1e-6 * max(operator.mu, 1.0) * scale:
            raise EigenSolverError(f"LOBPCG did not converge for {operator.label}", trace=trace)
    core_metrics.record_eigensolve("grid")
    return values, vectors


# -- reference vectors ---------------------------------------------------


def _radial_reference(operator: DiscretizedOperator, samples: np.ndarray) -> np.ndarray:
    assert operator.bessel is not None
    coefficients = operator.bessel.coefficients(samples)
    return coefficients / np.linalg.norm(coefficients)


def _span_overlap(vector: np.ndarray, references: list[np.ndarray]) -> float:
    basis, _ = np.linalg.qr(np.column_stack(references))
    projection = basis.T @ vector
    return float(np.linalg.norm(projection) / np.linalg.norm(vector))


# -- checks --------------------------------------------------------------


def _radial_spectrum(operators: OperatorSet, report: SpectralReport, tolerance: float) -> None:
    profile = operators.profile
    d = profile.dimension
    l1_minima: list[float] = []
    for name in ("L1", "L2"):
        collected: list[float] = []
        negatives = zeros = 0
        overlaps: list[float] = []
        report.eigenvalues[name] = {}
        for operator in operators.sectors(name):
            k = operator.sector
            assert k is not None and operator.bessel is not None
            values, vectors = dense_eigenpairs(operator)
            report.eigenvalues[name][str(k)] = [float(v) for v in values]
            collected.extend(float(v) for v in values for _ in range(operator.multiplicity))
            sector_negatives = int(np.sum(values < -tolerance))
            zero_index = np.flatnonzero(np.abs(values) < tolerance)
            negatives += sector_negatives * operator.multiplicity
            zeros += zero_index.size * operator.multiplicity
            if name == "L1":
                l1_minima.append(float(values[0]))
            points = operator.bessel.points
            reference = None
            if name == "L1" and k == 1:
                reference = _radial_reference(operator, profile.evaluate_slope(points))
            elif name == "L2" and k == 0:
                reference = _radial_reference(operator, profile.evaluate(points))
            for index in zero_index:
                if reference is not None:
                    overlaps.append(abs(float(reference @ vectors[:, index])))

            expected_negative = 1 if (name == "L1" and k == 0) else 0
            expected_zero = 1 if ((name == "L1" and k == 1) or (name == "L2" and k == 0)) else 0
            if sector_negatives != expected_negative:
                report.findings.append(f"{name} sector {k}: {sector_negatives} negative eigenvalues")
            if zero_index.size != expected_zero:
                report.findings.append(f"{name} sector {k}: {zero_index.size} zero eigenvalues")
            if expected_zero and zero_index.size == 1 and zero_index[0] != expected_negative:
                report.findings.append(f"{name} sector {k}: zero mode is not the expected level")
        report.lowest[name] = sorted(collected)[:EIGENVALUE_COUNT]
        report.negative_counts[name] = negatives
        report.zero_counts[name] = zeros
        report.zero_overlaps[name] = overlaps
        if any(overlap <= OVERLAP_THRESHOLD for overlap in overlaps):
            report.findings.append(f"{name} zero mode does not match its symmetry mode")
    report.sector_minima = l1_minima
    if d == 2 and any(b <= a for a, b in zip(l1_minima[1:], l1_minima[2:])):
        report.findings.append("L1 sector minima are not increasing for k >= 1")


def _grid_spectrum(operators: OperatorSet, report: SpectralReport, tolerance: float) -> None:
    grid = operators.grid
    d = operators.dimension
    eta = operators.eta_grid
    references = {
        "L1": [d_eta.ravel() for d_eta in spectral.gradient_values(eta, grid)],
        "L2": [eta.ravel()],
    }
    expected = {"L1": (1, d), "L2": (0, 1)}
    for name in ("L1", "L2"):
        values, vectors = grid_eigenpairs(operators.full[name])
        report.eigenvalues[name] = {"grid": [float(v) for v in values]}
        report.lowest[name] = [float(v) for v in values]
        negatives = int(np.sum(values < -tolerance))
        zero_index = np.flatnonzero(np.abs(values) < tolerance)
        report.negative_counts[name] = negatives
        report.zero_counts[name] = int(zero_index.size)
        overlaps = [_span_overlap(vectors[:, i], references[name]) for i in zero_index]
        report.zero_overlaps[name] = overlaps
        if (negatives, zero_index.size) != expected[name]:
            report.findings.append(
                f"{name}: {negatives} negative and {zero_index.size} zero eigenvalues, "
                f"expected {expected[name][0]} and {expected[name][1]}"
            )
        if any(overlap <= OVERLAP_THRESHOLD for overlap in overlaps):
            report.findings.append(f"{name} zero mode does not match its symmetry mode")


def _relative_norm(values: np.ndarray, reference: np.ndarray, operators: OperatorSet) -> float:
    grid = operators.grid
    return float(np.sqrt(spectral.l2_squared(values, grid) / spectral.l2_squared(reference, grid)))


def _null_residuals(operators: OperatorSet, report: SpectralReport) -> None:
    grid = operators.grid
    eta = operators.eta_grid
    l1, l2 = operators.full["L1"], operators.full["L2"]
    for axis, slope in zip("xy", spectral.gradient_values(eta, grid)):
        applied = l1.apply(slope.ravel()).reshape(grid.shape)
        report.null_residuals[f"L1_d{axis}_eta"] = _relative_norm(applied, slope, operators)
    applied = l2.apply(eta.ravel()).reshape(grid.shape)
    report.null_residuals["L2_eta"] = _relative_norm(applied, eta, operators)


def _algebra_residuals(operators: OperatorSet, report: SpectralReport) -> None:
    """𝓛z_t = 0, 𝓛z_g = 0, 𝓛z_b = 2iz_t, 𝓛z_s = iz_g at σ = (0, 0, 0, μ)."""
    profile = operators.profile
    frame = tangent_frame(profile, SolitonParams.at_rest(profile.mu, profile.dimension), operators.grid)
    block = operators.block_apply
    for axis, (z_t, z_b) in zip("xy", zip(frame.translations, frame.boosts)):
        report.algebra_residuals[f"translation_{axis}"] = _relative_norm(block(z_t.values), z_t.values, operators)
        report.algebra_residuals[f"boost_{axis}"] = _relative_norm(
            block(z_b.values) - 2j * z_t.values, 2.0 * z_t.values, operators
        )
    z_g, z_s = frame.gauge.values, frame.scaling.values
    report.algebra_residuals["gauge"] = _relative_norm(block(z_g), z_g, operators)
    report.algebra_residuals["scaling"] = _relative_norm(block(z_s) - 1j * z_g, z_g, operators)


def even_sector_inverse_pairing(operators: OperatorSet) -> float:
    """⟨η, L₁⁻¹η⟩, solved in the even sector."""
    profile = operators.profile
    if operators.has_radial:
        operator = operators.sector("L1", 0)
        assert operator.bessel is not None and operator.matrix is not None
        rhs = operator.bessel.coefficients(profile.evaluate(operator.bessel.points))
        solution = solve(operator.matrix, rhs, assume_a="sym")
        return operator.bessel.inner(rhs, solution)
    operator = operators.full["L1"]
    eta = operators.eta_grid
    solution, info = gmres(
        operator.as_linear_operator(),
        eta.ravel(),
        M=grid_preconditioner(operator),
        rtol=1e-12,
        atol=0.0,
        restart=60,
        maxiter=60,
    )
    if info != 0:
        raise NumericalError(f"even-sector solve did not converge (info={info})")
    return spectral.real_inner_values(eta, solution.reshape(eta.shape), operators.grid)


def spectral_report(operators: OperatorSet, profile: Optional[RadialProfile] = None) -> SpectralReport:
    """Eigenvalue counts, zero-mode checks and the null-space verdict."""
    profile = profile or operators.profile
    tolerance = ZERO_TOLERANCE * profile.mu
    domain = "radial" if operators.has_radial else "grid"
    report = SpectralReport(mu=profile.mu, dimension=profile.dimension, domain=domain)
    if operators.has_radial:
        _radial_spectrum(operators, report, tolerance)
    else:
        _grid_spectrum(operators, report, tolerance)
    _null_residuals(operators, report)
    _algebra_residuals(operators, report)

    if profile.has_mu_derivative:
        slope = profile_mass_slope(profile)
        pairing = even_sector_inverse_pairing(operators)
        report.mu_identity = {
            "inverse_pairing": pairing,
            "m_prime": slope,
            "residual": abs(pairing + slope),
        }
    report.condition_f = "pass" if not report.findings else "fail"
    if not report.passed:
        core_metrics.record_certificate_failure("null_space")
        logger.warning("Null-space condition failed: %s", "; ".join(report.findings))
    logger.info(
        "Spectral report: mu=%g domain=%s negatives=%s zeros=%s verdict=%s",
        report.mu,
        domain,
        report.negative_counts,
        report.zero_counts,
        report.condition_f,
    )
    return report
