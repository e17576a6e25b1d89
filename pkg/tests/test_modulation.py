import numpy as np
import pytest

from src.solitonlab.core.exceptions import DecompositionError
from src.solitonlab.evolve.runner import evolve_run
from src.solitonlab.evolve.stepper import EvolutionConfig
from src.solitonlab.fields import spectral
from src.solitonlab.fields.field import ComplexField
from src.solitonlab.linearization.coercivity import coercivity
from src.solitonlab.linearization.operators import assemble_operators
from src.solitonlab.model.potential import PotentialSpec
from src.solitonlab.modulation.decompose import (
    decompose,
    predict,
    project_skew_orthogonal,
    resynthesize,
    rest_frame,
    skew_orthogonality,
)
from src.solitonlab.modulation.lyapunov import attach_lyapunov, energy_drift, lyapunov_gap
from src.solitonlab.modulation.records import LyapunovRecord
from src.solitonlab.modulation.residuals import bound_constant, close_alpha_records, delta_X_eval
from src.solitonlab.modulation.tracking import Tracker, track
from src.solitonlab.profile.cache import PROFILE_CACHE_SIZE, ProfileCache
from src.solitonlab.profile.family import inverse_frame_transform, synthesize
from src.solitonlab.profile.types import ParameterDomain, SolitonParams

SIGMA = SolitonParams((1.5,), (0.4,), 0.3, 1.2)


def _perturbed(cache, grid, sigma, size):
    profile = cache.profile(sigma.mu)
    x = grid.axis
    bump = np.exp(-((x - 1.0) ** 2)) * (1.0 + 0.5j)
    w = project_skew_orthogonal(bump, rest_frame(profile, grid))
    w *= size / np.sqrt(spectral.h1_squared(w, grid))
    eta = profile.evaluate(grid.radius)
    return inverse_frame_transform(ComplexField(grid, eta + w), sigma), w


def test_decompose_recovers_exact_soliton(cubic_cache, line_grid):
    psi = synthesize(cubic_cache.profile(SIGMA.mu), SIGMA, line_grid)
    guess = SolitonParams((1.55,), (0.38,), 0.32, 1.15)
    state = decompose(psi, guess, cubic_cache)
    assert np.allclose(state.sigma.as_vector(), SIGMA.as_vector(), atol=1e-8)
    assert state.w_h1 < 1e-8
    assert state.iterations >= 1


def test_decompose_finds_skew_orthogonal_remainder(cubic_cache, line_grid):
    psi, w = _perturbed(cubic_cache, line_grid, SIGMA, 0.01)
    state = decompose(psi, SIGMA, cubic_cache)
    assert np.allclose(state.sigma.as_vector(), SIGMA.as_vector(), atol=1e-8)
    assert state.w_h1 == pytest.approx(0.01, rel=1e-6)
    assert np.max(np.abs(state.w.values - w)) < 1e-8
    assert skew_orthogonality(state, cubic_cache) < 1e-10
    assert np.max(np.abs(resynthesize(state, cubic_cache).values - psi.values)) < 1e-9


def test_decompose_refuses_guess_outside_trust_radius(cubic_cache, line_grid):
    psi = synthesize(cubic_cache.profile(1.0), SolitonParams((8.0,), (0.0,), 0.0, 1.0), line_grid)
    with pytest.raises(DecompositionError):
        decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)


def test_predict_uses_free_flight():
    sigma = predict(SolitonParams((0.0,), (0.4,), 0.0, 1.0), 2.0, potential_value=0.1)
    assert sigma.a[0] == pytest.approx(0.8)
    assert sigma.gamma == pytest.approx(2.0 * (1.0 + 0.04 - 0.1))


def test_tracking_free_soliton_has_vanishing_residuals(cubic, cubic_cache, line_grid):
    sigma0 = SolitonParams((-3.0,), (0.4,), 0.0, 1.0)
    psi0 = synthesize(cubic_cache.profile(1.0), sigma0, line_grid)
    trajectory = evolve_run(psi0, EvolutionConfig(dt=0.005, t_end=2.0, stride=40), None, cubic, keep_fields=True)
    result = track(zip(trajectory.times, trajectory.fields), sigma0, cubic_cache)
    assert len(result.states) == len(trajectory.fields)
    assert len(result.alphas) == len(result.states) - 2
    for state in result.states:
        assert state.sigma.a[0] == pytest.approx(-3.0 + 0.4 * state.time, abs=1e-6)
        assert state.sigma.mu == pytest.approx(1.0, abs=1e-6)
    assert max(record.sup for record in result.alphas) < 1e-4

    close_alpha_records(result, None, cubic, cubic_cache)
    assert all(record.closure is not None and record.closure < 1e-4 for record in result.alphas)
    rows = result.rows()
    assert rows[1]["kind"] == "modulation"
    assert "closure" in rows[1]


def test_tracker_keeps_phase_continuous(cubic, cubic_cache, line_grid):
    sigma0 = SolitonParams.at_rest(1.0)
    psi0 = synthesize(cubic_cache.profile(1.0), sigma0, line_grid)
    tracker = Tracker(sigma0, cubic_cache)
    evolve_run(psi0, EvolutionConfig(dt=0.01, t_end=8.0, stride=100), None, cubic, [tracker])
    phases = [state.sigma.gamma for state in tracker.states]
    assert phases[-1] == pytest.approx(8.0, abs=1e-4)
    assert all(b > a for a, b in zip(phases, phases[1:]))


def test_delta_x_vanishes_on_the_manifold(cubic, cubic_cache, line_grid):
    psi = synthesize(cubic_cache.profile(1.0), SolitonParams.at_rest(1.0), line_grid)
    state = decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)
    delta_x = delta_X_eval(state, np.zeros(4), None, cubic, cubic_cache)
    assert np.max(np.abs(delta_x)) < 1e-8


def test_delta_x_is_second_order_in_the_fluctuation(cubic, cubic_cache, line_grid):
    sizes = (0.02, 0.01)
    norms = []
    for size in sizes:
        psi, _ = _perturbed(cubic_cache, line_grid, SolitonParams.at_rest(1.0), size)
        state = decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)
        norms.append(np.linalg.norm(delta_X_eval(state, np.zeros(4), None, cubic, cubic_cache)))
    assert norms[0] / norms[1] == pytest.approx(4.0, rel=0.1)


def test_delta_x_is_linear_in_potential_curvature(cubic, cubic_cache, line_grid):
    psi = synthesize(cubic_cache.profile(1.0), SolitonParams.at_rest(1.0), line_grid)
    state = decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)
    scaling = []
    for rate in (0.2, 0.1):
        potential = PotentialSpec.cosine(0.1, rate, 1)
        delta_x = delta_X_eval(state, np.zeros(4), potential, cubic, cubic_cache)
        assert np.allclose(delta_x[[0, 1, 3]], 0.0, atol=1e-10)
        scaling.append(abs(delta_x[2]))
    assert scaling[1] > 0
    assert scaling[0] / scaling[1] == pytest.approx(4.0, rel=0.05)


def test_bound_constant_is_undefined_without_scale():
    assert bound_constant(np.zeros(4), np.zeros(4), 0.0, 0.0) is None
    assert bound_constant(np.ones(4), np.zeros(4), 0.5, 0.0) == pytest.approx(8.0)


def test_lyapunov_gap_matches_quadratic_form(cubic, cubic_cache, cubic_profile, line_grid):
    operators = assemble_operators(cubic_profile, cubic)
    rho = coercivity(operators, rest_frame(cubic_profile, operators.grid), cubic_profile).rho
    psi, _ = _perturbed(cubic_cache, line_grid, SolitonParams.at_rest(1.0), 0.01)
    state = decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)
    record = lyapunov_gap(state, cubic, cubic_cache, rho)
    assert record.delta_e > 0
    assert record.delta_e == pytest.approx(record.quadratic_estimate, rel=1e-4)
    assert record.lower_bound_ok is True


def test_lyapunov_gap_skips_bound_outside_safe_region(cubic, cubic_cache, line_grid):
    psi, _ = _perturbed(cubic_cache, line_grid, SolitonParams.at_rest(1.0), 0.1)
    state = decompose(psi, SolitonParams.at_rest(1.0), cubic_cache)
    assert lyapunov_gap(state, cubic, cubic_cache, rho=0.5).lower_bound_ok is None


def test_attach_lyapunov_fills_one_record_per_state(cubic, cubic_cache, line_grid):
    sigma0 = SolitonParams.at_rest(1.0)
    psi0, _ = _perturbed(cubic_cache, line_grid, sigma0, 0.01)
    trajectory = evolve_run(psi0, EvolutionConfig(dt=0.005, t_end=0.5, stride=25), None, cubic, keep_fields=True)
    result = attach_lyapunov(track(zip(trajectory.times, trajectory.fields), sigma0, cubic_cache), cubic, cubic_cache)
    assert [record.time for record in result.lyapunov] == [state.time for state in result.states]
    assert all(record.rho_used is None and record.lower_bound_ok is None for record in result.lyapunov)
    assert "delta_e" in result.rows()[0]


def test_energy_drift_is_measured_from_the_first_sample():
    records = [
        LyapunovRecord(time=t, delta_e=e, quadratic_estimate=e, w_h1=0.01, lower_bound_ok=None, rho_used=None)
        for t, e in ((0.0, 1e-5), (1.0, 1.2e-5), (2.0, 0.7e-5))
    ]
    assert energy_drift(records) == pytest.approx(3e-6)
    assert energy_drift([]) == 0.0


def test_tracking_keeps_profile_cache_bounded(cubic, line_grid):
    cache = ProfileCache(cubic, 1, ParameterDomain(0.5, 2.0))
    potential = PotentialSpec.from_eps("cosine", 0.05, 0.1, 1)
    sigma0 = SolitonParams((-1.0,), (0.2,), 0.0, 1.0)
    psi0 = synthesize(cache.profile(1.0), sigma0, line_grid)
    tracker = Tracker(sigma0, cache)
    evolve_run(psi0, EvolutionConfig(dt=0.005, t_end=2.0, stride=20), potential, cubic, [tracker])
    assert len(tracker.states) >= 20
    assert len(cache._profiles) <= PROFILE_CACHE_SIZE


@pytest.mark.slow
def test_decompose_recovers_randomized_parameters(cubic_cache, line_grid):
    rng = np.random.default_rng(20)
    x = line_grid.axis
    for _ in range(100):
        sigma = SolitonParams(
            (rng.uniform(-4.0, 4.0),), (rng.uniform(-0.5, 0.5),), rng.uniform(-np.pi, np.pi), rng.uniform(0.7, 1.6)
        )
        profile = cubic_cache.profile(sigma.mu)
        center, width = rng.uniform(-2.0, 2.0), rng.uniform(0.5, 2.0)
        bump = np.exp(-(((x - center) / width) ** 2)) * complex(*rng.standard_normal(2))
        w = project_skew_orthogonal(bump, rest_frame(profile, line_grid))
        w *= rng.uniform(1e-3, 0.05) / np.sqrt(spectral.h1_squared(w, line_grid))
        psi = inverse_frame_transform(ComplexField(line_grid, profile.evaluate(line_grid.radius) + w), sigma)
        guess = SolitonParams.from_vector(sigma.as_vector() + rng.uniform(-0.01, 0.01, 4), 1)

        state = decompose(psi, guess, cubic_cache)
        assert np.allclose(state.sigma.as_vector(), sigma.as_vector(), atol=1e-8)
        eta_norm = np.sqrt(spectral.l2_squared(profile.evaluate(line_grid.radius), line_grid))
        assert state.constraint_residual < 1e-10 * eta_norm
        assert skew_orthogonality(state, cubic_cache) < 1e-10
