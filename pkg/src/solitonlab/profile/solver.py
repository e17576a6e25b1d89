"""Ground-state solver for (-Δ + μ)η = f(η).

Profiles are computed on an auxiliary periodic grid of half-extent
r_max = 40/√μ and then tabulated on the uniform radial table r_i = i·r_max/N.
In one dimension the auxiliary grid has 2N points, so the table is the
right half of the even grid function; in two dimensions the y = 0 row is
refined to the same resolution by trigonometric interpolation.

d = 1 with a local nonlinearity starts from a shooting solution, everything
else from a Petviashvili iteration; both finish with a Newton polish.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft
from scipy import special
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, gmres

from ..core import metrics as core_metrics
from ..core.exceptions import ProfileError
from ..fields import spectral
from ..fields.grid import SpatialGrid
from ..linearization.radial import sector_grid
from ..model.nonlinearity import LocalNonlinearity, Nonlinearity, PowerNonlinearity
from .types import RadialProfile

logger = logging.getLogger(__name__)

RADIAL_EXTENT = 40.0
RADIAL_POINTS = 8192
PLANE_POINTS = 512
TAIL_FLOOR = 1e-10
RESIDUAL_TOLERANCE = 1e-9
MU_DERIVATIVE_TOLERANCE = 1e-8
SINGULAR_THRESHOLD = 1e-6


def radial_extent(mu: float) -> float:
    return RADIAL_EXTENT / np.sqrt(mu)


def profile_grid(
    mu: float,
    dimension: int,
    radial_points: int = RADIAL_POINTS,
    plane_points: int = PLANE_POINTS,
) -> SpatialGrid:
    points = 2 * radial_points if dimension == 1 else plane_points
    return SpatialGrid(dimension, radial_extent(mu), points)


# -- grid helpers -----------------------------------------------------------


def _symmetrize(values: np.ndarray) -> np.ndarray:
    out = values
    for axis in range(values.ndim):
        out = 0.5 * (out + np.roll(np.flip(out, axis=axis), 1, axis=axis))
    if values.ndim == 2:
        out = 0.5 * (out + out.T)
    return out


def _residual(spec: Nonlinearity, mu: float, grid: SpatialGrid, eta: np.ndarray) -> np.ndarray:
    return spectral.apply_symbol(eta, mu + grid.k_squared) - spec.apply(eta, grid)


def _refine_line(line: np.ndarray, points: int) -> np.ndarray:
    n = line.size
    if n == points:
        return line
    coefficients = sfft.fft(line)
    padded = np.zeros(points, dtype=complex)
    half = n // 2
    padded[:half] = coefficients[:half]
    padded[points - half + 1 :] = coefficients[half + 1 :]
    padded[half] = 0.5 * coefficients[half]
    padded[points - half] = 0.5 * coefficients[half]
    return sfft.ifft(padded).real * (points / n)


def _axis_line(values: np.ndarray, grid: SpatialGrid, radial_points: int) -> np.ndarray:
    if grid.dimension == 1:
        line = values
    else:
        line = values[:, grid.points // 2]
    return _refine_line(np.asarray(line, dtype=float), 2 * radial_points)


def _line_to_table(line: np.ndarray, radial_points: int, odd: bool = False) -> np.ndarray:
    edge = -line[0] if odd else line[0]
    return np.concatenate([line[radial_points:], [edge]])


def _table_to_line(table: np.ndarray) -> np.ndarray:
    n = table.size - 1
    return np.concatenate([table[n:0:-1], table[:n]])


def _tabulate(
    values: np.ndarray, grid: SpatialGrid, radial_points: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    line = _axis_line(values, grid, radial_points)
    line_grid = SpatialGrid(1, grid.half_extent, 2 * radial_points)
    slope = spectral.derivative_values(line, line_grid, 0, 1)
    curvature = spectral.derivative_values(line, line_grid, 0, 2)
    return (
        _line_to_table(line, radial_points),
        _line_to_table(slope, radial_points, odd=True),
        _line_to_table(curvature, radial_points),
    )


def _decay_shape(r: np.ndarray, mu: float, dimension: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = np.sqrt(mu)
    if dimension == 1:
        base = np.exp(-q * r)
        return base, -q * base, mu * base
    z = q * r
    k0, k1 = special.k0(z), special.k1(z)
    return k0, -q * k1, mu * (k0 + k1 / z)


def _tail_start(eta: np.ndarray) -> int:
    below = np.flatnonzero(eta[1:] < TAIL_FLOOR * eta[0])
    return int(below[0]) + 1 if below.size else eta.size


def _clean_tail(
    radii: np.ndarray,
    eta: np.ndarray,
    eta_r: np.ndarray,
    eta_rr: np.ndarray,
    mu: float,
    dimension: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Replace the sub-floor tail by the exact linear decay C·e^{-√μ r} or C·K₀(√μ r)."""
    start = _tail_start(eta)
    if start >= eta.size:
        return eta, eta_r, eta_rr, start
    base, slope, curvature = _decay_shape(radii[start:], mu, dimension)
    scale = eta[start] / base[0]
    eta, eta_r, eta_rr = eta.copy(), eta_r.copy(), eta_rr.copy()
    eta[start:] = scale * base
    eta_r[start:] = scale * slope
    eta_rr[start:] = scale * curvature
    return eta, eta_r, eta_rr, start


def radial_residual(
    local: LocalNonlinearity,
    mu: float,
    dimension: int,
    radii: np.ndarray,
    eta: np.ndarray,
    eta_r: np.ndarray,
    eta_rr: np.ndarray,
) -> float:
    laplacian = eta_rr.copy()
    if dimension > 1:
        laplacian[1:] += (dimension - 1) * eta_r[1:] / radii[1:]
        laplacian[0] = dimension * eta_rr[0]
    residual = -laplacian + mu * eta - local.h(eta * eta) * eta
    return float(np.max(np.abs(residual)))


# -- initial guesses -------------------------------------------------------


def _linear_amplitude(local: LocalNonlinearity, mu: float) -> float:
    """Amplitude η_lin at which h(η_lin²) = μ."""

    def excess(p: float) -> float:
        return float(local.h(np.array([p]))[0]) - mu

    upper = 1.0
    while excess(upper) <= 0:
        upper *= 2.0
        if upper > 1e12:
            raise ProfileError(f"h never reaches mu={mu:g}; no positive profile exists")
    return float(np.sqrt(brentq(excess, 0.0, upper, xtol=1e-15, rtol=1e-14)))


def _shoot(local: LocalNonlinearity, mu: float, amplitude: float, dense: bool = False):
    def rhs(r: float, y: np.ndarray) -> list[float]:
        return [y[1], mu * y[0] - float(local.h(np.array([y[0] * y[0]]))[0]) * y[0]]

    def crossing(r: float, y: np.ndarray) -> float:
        return y[0]

    def turning(r: float, y: np.ndarray) -> float:
        return y[1]

    crossing.terminal = True  # type: ignore[attr-defined]
    crossing.direction = -1  # type: ignore[attr-defined]
    turning.terminal = True  # type: ignore[attr-defined]
    turning.direction = 1  # type: ignore[attr-defined]
    return solve_ivp(
        rhs,
        (0.0, radial_extent(mu)),
        [amplitude, 0.0],
        method="DOP853",
        rtol=1e-10,
        atol=1e-12 * amplitude,
        events=(crossing, turning),
        dense_output=dense,
    )


def _overshoots(local: LocalNonlinearity, mu: float, amplitude: float) -> bool:
    return bool(_shoot(local, mu, amplitude).t_events[0].size)


def shooting_amplitude(local: LocalNonlinearity, mu: float) -> float:
    """Central amplitude of the d=1 ground state by bisection on overshoot/undershoot."""
    base = _linear_amplitude(local, mu)
    low, high = base, 10.0 * base
    for _ in range(60):
        if _overshoots(local, mu, high):
            break
        low, high = high, 2.0 * high
    else:
        raise ProfileError("shooting bracket never overshoots")
    while high - low > 1e-10 * high:
        middle = 0.5 * (low + high)
        if _overshoots(local, mu, middle):
            high = middle
        else:
            low = middle
    logger.debug("Shooting bracket converged: [%.15g, %.15g]", low, high)
    return 0.5 * (low + high)


def _shooting_guess(local: LocalNonlinearity, mu: float, grid: SpatialGrid) -> np.ndarray:
    amplitude = shooting_amplitude(local, mu)
    solution = _shoot(local, mu, amplitude, dense=True)
    fine = np.linspace(0.0, solution.t[-1], 20001)
    trace = solution.sol(fine)[0]
    below = np.flatnonzero(trace < 1e-3 * amplitude)
    match = int(below[0]) if below.size else fine.size - 1
    r_match, eta_match = fine[match], trace[match]
    r = np.abs(grid.axis)
    core = solution.sol(np.minimum(r, r_match))[0]
    tail = eta_match * np.exp(-np.sqrt(mu) * (r - r_match))
    return np.where(r <= r_match, core, tail)


def _petviashvili(spec: Nonlinearity, mu: float, grid: SpatialGrid, max_iterations: int = 2000) -> np.ndarray:
    symbol = mu + grid.k_squared
    p = spec.homogeneity
    exponent = p / (p - 1.0)
    eta = 2.0 * np.sqrt(mu) * np.exp(-0.5 * mu * grid.radius**2)
    residual = np.inf
    for iteration in range(max_iterations):
        forcing = spec.apply(eta, grid)
        eta_hat = spectral.forward(eta)
        forcing_hat = spectral.forward(forcing)
        numerator = float(np.sum(symbol * np.abs(eta_hat) ** 2))
        denominator = float(np.real(np.vdot(eta_hat, forcing_hat)))
        if denominator <= 0:
            raise ProfileError("non-positive iterate in Petviashvili iteration", residual=residual)
        factor = numerator / denominator
        updated = _symmetrize(spectral.inverse(factor**exponent * forcing_hat / symbol).real)
        peak = float(updated.max())
        if not np.isfinite(peak) or peak > 1e8 or peak < 1e-12:
            raise ProfileError("Petviashvili iteration diverged", residual=residual)
        if float(updated.min()) < -1e-6 * peak:
            raise ProfileError("non-positive iterate in Petviashvili iteration", residual=residual)
        change = float(np.max(np.abs(updated - eta)))
        eta = updated
        if change < 1e-11 * peak:
            residual = float(np.max(np.abs(_residual(spec, mu, grid, eta))))
            if residual < 1e-7 * peak:
                logger.debug("Petviashvili converged after %d iterations", iteration + 1)
                return eta
    residual = float(np.max(np.abs(_residual(spec, mu, grid, eta))))
    if residual < 1e-6 * float(eta.max()):
        return eta
    raise ProfileError("Petviashvili iteration did not converge", residual=residual)


# -- Newton polish ---------------------------------------------------------


def _operator(apply: Callable[[np.ndarray], np.ndarray], grid: SpatialGrid) -> LinearOperator:
    return LinearOperator(
        (grid.size, grid.size),
        matvec=lambda v: apply(np.asarray(v).reshape(grid.shape)).ravel(),
        dtype=float,
    )


def _l1_operator(spec: Nonlinearity, mu: float, grid: SpatialGrid, eta: np.ndarray) -> LinearOperator:
    symbol = mu + grid.k_squared
    linearization = spec.linearize(eta, grid)
    return _operator(lambda w: spectral.apply_symbol(w, symbol) - linearization.real_action(w), grid)


def _preconditioner(mu: float, grid: SpatialGrid) -> LinearOperator:
    symbol = mu + grid.k_squared
    return _operator(lambda w: spectral.apply_symbol(w, 1.0 / symbol), grid)


def _solve_l1(
    spec: Nonlinearity, mu: float, grid: SpatialGrid, eta: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    solution, info = gmres(
        _l1_operator(spec, mu, grid, eta),
        rhs.ravel(),
        M=_preconditioner(mu, grid),
        rtol=1e-13,
        atol=0.0,
        restart=40,
        maxiter=40,
    )
    if info < 0:
        raise ProfileError(f"GMRES breakdown (info={info})")
    return _symmetrize(solution.reshape(grid.shape))


def newton_polish(
    spec: Nonlinearity, mu: float, grid: SpatialGrid, eta: np.ndarray, max_steps: int = 8
) -> np.ndarray:
    best = float(np.max(np.abs(_residual(spec, mu, grid, eta))))
    for step in range(max_steps):
        if best <= 1e-11 * float(eta.max()):
            break
        residual = _residual(spec, mu, grid, eta)
        candidate = eta - _solve_l1(spec, mu, grid, eta, residual)
        size = float(np.max(np.abs(_residual(spec, mu, grid, candidate))))
        logger.debug("Newton polish step %d: residual %.3e -> %.3e", step, best, size)
        if size >= best:
            break
        eta, best = candidate, size
    return eta


# -- public operations -----------------------------------------------------


def solve_profile(
    spec: Nonlinearity,
    mu: float,
    d: int,
    *,
    radial_points: int = RADIAL_POINTS,
    plane_points: int = PLANE_POINTS,
    with_mu_derivative: bool = True,
) -> RadialProfile:
    """Positive radial ground state at frequency μ, with residual and shape checks."""
    if not mu > 0:
        raise ValueError(f"frequency must be positive, got {mu}")
    grid = profile_grid(mu, d, radial_points, plane_points)
    spec.prepare(grid)
    if d == 1 and isinstance(spec, LocalNonlinearity):
        method = "shooting"
        guess = _shooting_guess(spec, mu, grid)
    else:
        method = "petviashvili"
        guess = _petviashvili(spec, mu, grid)
    eta_grid = _symmetrize(newton_polish(spec, mu, grid, _symmetrize(guess)))
    grid_residual = float(np.max(np.abs(_residual(spec, mu, grid, eta_grid))))

    radii = np.arange(radial_points + 1) * (grid.half_extent / radial_points)
    eta, eta_r, eta_rr = _tabulate(eta_grid, grid, radial_points)
    if eta[0] <= 0:
        raise ProfileError("profile has non-positive amplitude", residual=grid_residual)
    eta, eta_r, eta_rr, _ = _clean_tail(radii, eta, eta_r, eta_rr, mu, d)

    residual = grid_residual
    if isinstance(spec, LocalNonlinearity):
        residual = max(residual, radial_residual(spec, mu, d, radii, eta, eta_r, eta_rr))
    if residual >= RESIDUAL_TOLERANCE * eta[0]:
        raise ProfileError("profile residual above tolerance", residual=residual)
    if np.any(eta[:-1] <= 0):
        raise ProfileError("profile is not positive", residual=residual)
    if spec.is_local and np.any(np.diff(eta) >= 0):
        raise ProfileError("profile is not monotonically decreasing", residual=residual)
    if eta[-1] >= TAIL_FLOOR * eta[0]:
        raise ProfileError("profile does not decay inside r_max", residual=residual)

    core_metrics.record_profile_solve(method)
    logger.info(
        "Solved profile: mu=%g d=%d method=%s amplitude=%.12g residual=%.2e",
        mu,
        d,
        method,
        eta[0],
        residual,
    )
    profile = RadialProfile(
        mu=float(mu),
        dimension=d,
        radii=radii,
        eta=eta,
        eta_r=eta_r,
        eta_rr=eta_rr,
        residual=residual,
        method=method,
        nonlinearity=spec.describe(),
    )
    if with_mu_derivative:
        profile = mu_derivative(profile, spec, plane_points=plane_points)
    return profile


def profile_on_grid(profile: RadialProfile, grid: SpatialGrid) -> np.ndarray:
    """η sampled on a centred grid; exact table copy on the matching 1D grid."""
    if grid.dimension == 1 and grid.points == 2 * profile.intervals and np.isclose(
        grid.half_extent, profile.r_max
    ):
        return _table_to_line(profile.eta)
    return profile.evaluate(grid.radius)


def scaling_mu_derivative(profile: RadialProfile, exponent: float) -> tuple[np.ndarray, np.ndarray]:
    """∂_μη = (η/(2s) + ½ r η')/μ for a pure power."""
    r, mu = profile.radii, profile.mu
    eta_mu = (profile.eta / (2.0 * exponent) + 0.5 * r * profile.eta_r) / mu
    eta_mu_r = (profile.eta_r / (2.0 * exponent) + 0.5 * (profile.eta_r + r * profile.eta_rr)) / mu
    return eta_mu, eta_mu_r


def smallest_even_eigenvalue(profile: RadialProfile, spec: LocalNonlinearity, points: int = 512) -> float:
    """Smallest |λ| of the even-sector L₁ on a coarse Bessel grid."""
    grid, kinetic = sector_grid(profile.dimension, 0, profile.r_max, points)
    potential = spec.real_multiplier(profile.evaluate(grid.points))
    matrix = kinetic + np.diag(profile.mu - potential)
    eigenvalues = eigh(matrix, eigvals_only=True)
    return float(np.min(np.abs(eigenvalues)))


def mu_derivative(
    profile: RadialProfile,
    spec: Nonlinearity,
    *,
    force_linear_solve: bool = False,
    plane_points: int = PLANE_POINTS,
) -> RadialProfile:
    """Attach ∂_μη, from the scaling law for pure powers or by solving L₁ζ = -η."""
    if isinstance(spec, PowerNonlinearity) and not force_linear_solve:
        return profile.with_mu_derivative(*scaling_mu_derivative(profile, spec.exponent))

    mu, d, n = profile.mu, profile.dimension, profile.intervals
    if isinstance(spec, LocalNonlinearity):
        smallest = smallest_even_eigenvalue(profile, spec)
        if smallest < SINGULAR_THRESHOLD:
            raise ProfileError(f"even-sector L1 is near-singular (|lambda|={smallest:.2e})")
    grid = profile_grid(mu, d, n, plane_points)
    eta = profile_on_grid(profile, grid)
    zeta = _solve_l1(spec, mu, grid, eta, -eta)
    if not isinstance(spec, LocalNonlinearity):
        # ‖L₁ζ‖/‖ζ‖ bounds the smallest even-sector |λ| from above.
        gain = float(np.sqrt(spectral.l2_squared(eta, grid) / max(spectral.l2_squared(zeta, grid), 1e-300)))
        if gain < SINGULAR_THRESHOLD:
            raise ProfileError(f"even-sector L1 is near-singular (|lambda|<={gain:.2e})")
    check = _l1_operator(spec, mu, grid, eta).matvec(zeta.ravel()).reshape(grid.shape) + eta
    error = float(np.sqrt(spectral.l2_squared(check, grid)))
    if error >= MU_DERIVATIVE_TOLERANCE:
        raise ProfileError("mu-derivative solve did not reach tolerance", residual=error)

    eta_mu, eta_mu_r, _ = _tabulate(zeta, grid, n)
    start = _tail_start(profile.eta)
    if start < profile.eta.size:
        # Beyond the floor ∂_μη/η follows the linear tail: -(r - r_c)/(2√μ) plus a constant.
        r = profile.radii[start:]
        ratio = eta_mu[start] / profile.eta[start] - (r - r[0]) / (2.0 * np.sqrt(mu))
        eta_mu[start:] = profile.eta[start:] * ratio
        eta_mu_r[start:] = profile.eta_r[start:] * ratio - profile.eta[start:] / (2.0 * np.sqrt(mu))
    logger.debug("mu-derivative by linear solve: residual %.2e", error)
    return profile.with_mu_derivative(eta_mu, eta_mu_r)


def export_profile(profile: RadialProfile, path: str | Path, spec: Optional[Nonlinearity] = None) -> None:
    """Plain-text table r, η, η', ∂_μη with a commented header."""
    eta_mu = profile.eta_mu if profile.eta_mu is not None else np.full_like(profile.eta, np.nan)
    header = "\n".join(
        [
            f"nonlinearity: {spec.describe() if spec is not None else profile.nonlinearity}",
            f"mu: {profile.mu:.17g}",
            f"dimension: {profile.dimension}",
            f"residual: {profile.residual:.17g}",
            f"method: {profile.method}",
            "columns: r eta eta_r eta_mu",
        ]
    )
    table = np.column_stack([profile.radii, profile.eta, profile.eta_r, eta_mu])
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(target, table, fmt="%.17g", header=header)
