import numpy as np
import pytest

from src.solitonlab.core.exceptions import GuardViolationError, ParameterDomainError, ProfileError
from src.solitonlab.fields.grid import SpatialGrid
from src.solitonlab.model.nonlinearity import HartreeKernel, HartreeNonlinearity, saturable
from src.solitonlab.profile.cache import ProfileCache
from src.solitonlab.profile.family import (
    check_guard,
    frame_transform,
    inverse_frame_transform,
    mass_curve,
    profile_mass,
    profile_mass_slope,
    synthesize,
    tangent_frame,
)
from src.solitonlab.profile.solver import export_profile, mu_derivative, solve_profile
from src.solitonlab.profile.types import ParameterDomain, SolitonParams


def test_cubic_profile_matches_sech(cubic_profile, sech):
    r = np.linspace(0.0, 15.0, 301)
    assert np.max(np.abs(cubic_profile.evaluate(r) - sech(r))) < 1e-8
    assert cubic_profile.method == "shooting"
    assert cubic_profile.amplitude == pytest.approx(np.sqrt(2.0), abs=1e-8)


def test_cubic_mu_derivative_matches_closed_form(cubic_profile):
    r = np.linspace(0.0, 15.0, 301)
    exact = (1.0 / np.cosh(r) - r * np.tanh(r) / np.cosh(r)) / np.sqrt(2.0)
    assert np.max(np.abs(cubic_profile.evaluate_mu(r) - exact)) < 1e-6


def test_cubic_mass_and_slope(cubic_profile):
    assert profile_mass(cubic_profile) == pytest.approx(2.0, rel=1e-8)
    assert profile_mass_slope(cubic_profile) == pytest.approx(1.0, rel=1e-6)


def test_mass_curve_scales_like_square_root(cubic):
    curve = mass_curve(cubic, [0.5, 2.0], 1)
    assert curve.stable
    assert curve.verdict() == "pass"
    for point in curve.points:
        assert point.mass == pytest.approx(2.0 * np.sqrt(point.mu), rel=1e-7)
        assert point.mass_slope == pytest.approx(1.0 / np.sqrt(point.mu), rel=1e-5)


def test_saturable_profile_is_positive_and_decreasing():
    profile = solve_profile(saturable(1.0, 0.1), 1.0, 1)
    assert np.all(profile.eta[:-1] > 0)
    assert np.all(np.diff(profile.eta) < 0)
    assert profile_mass_slope(profile) > 0


def test_solve_profile_rejects_non_positive_frequency(cubic):
    with pytest.raises(ValueError):
        solve_profile(cubic, 0.0, 1)


def test_cache_rescales_power_profiles(cubic_cache, sech):
    profile = cubic_cache.profile(1.5)
    r = np.linspace(0.0, 10.0, 101)
    assert np.max(np.abs(profile.evaluate(r) - sech(r, 1.5))) < 1e-7


def test_cache_rejects_frequency_outside_interval(cubic_cache):
    with pytest.raises(ParameterDomainError):
        cubic_cache.profile(3.0)


def test_synthesize_and_frame_transform_invert(cubic_profile, line_grid):
    sigma = SolitonParams((2.5,), (0.3,), 0.7, 1.0)
    psi = synthesize(cubic_profile, sigma, line_grid)
    rest = frame_transform(psi, sigma)
    eta = cubic_profile.evaluate(line_grid.radius)
    assert np.max(np.abs(rest.values - eta)) < 1e-10
    again = inverse_frame_transform(rest, sigma)
    assert np.max(np.abs(again.values - psi.values)) < 1e-10


def test_tangent_frame_labels_follow_frame_order(cubic_profile, line_grid):
    frame = tangent_frame(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    assert frame.labels == ("t_x", "b_x", "g", "s")
    assert len(frame) == 4


def test_guard_rejects_soliton_near_boundary(cubic_profile):
    grid = SpatialGrid(1, 20.0, 512)
    with pytest.raises(GuardViolationError):
        check_guard(cubic_profile, SolitonParams((15.0,), (0.0,), 0.0, 1.0), grid)


def test_export_profile_writes_table(cubic_profile, cubic, tmp_path):
    path = tmp_path / "profile.txt"
    export_profile(cubic_profile, path, cubic)
    rows = [line for line in path.read_text().splitlines() if line and not line.startswith("#")]
    assert len(rows) == cubic_profile.radii.size


def test_cache_keeps_only_recent_profiles(cubic):
    cache = ProfileCache(cubic, 1, ParameterDomain(0.5, 2.0), max_profiles=4)
    for mu in np.linspace(0.6, 1.9, 30):
        cache.profile(mu)
    assert len(cache._profiles) == 4
    assert list(cache._profiles) == [float(mu) for mu in np.linspace(0.6, 1.9, 30)[-4:]]
    again = cache.profile(1.9)
    assert again is cache.profile(1.9)


def test_hartree_mu_derivative_uses_linear_solve(cubic_profile):
    contact = HartreeNonlinearity(kernel=HartreeKernel("delta"), coupling=1.0)
    profile = mu_derivative(cubic_profile, contact)
    r = np.linspace(0.0, 10.0, 201)
    exact = (1.0 / np.cosh(r) - r * np.tanh(r) / np.cosh(r)) / np.sqrt(2.0)
    assert np.max(np.abs(profile.evaluate_mu(r) - exact)) < 1e-4


def test_hartree_mu_derivative_rejects_near_singular_l1(cubic_profile, monkeypatch):
    contact = HartreeNonlinearity(kernel=HartreeKernel("delta"), coupling=1.0)
    monkeypatch.setattr(
        "src.solitonlab.profile.solver._solve_l1", lambda spec, mu, grid, eta, rhs: 1e9 * rhs
    )
    with pytest.raises(ProfileError, match="near-singular"):
        mu_derivative(cubic_profile, contact)


@pytest.mark.slow
def test_townes_profile_is_stable_under_refinement(cubic, townes_profile):
    finer = solve_profile(cubic, 1.0, 2, plane_points=768)
    assert townes_profile.method == "petviashvili"
    assert townes_profile.residual < 1e-9
    assert townes_profile.amplitude == pytest.approx(2.2062, abs=1e-3)
    assert finer.amplitude == pytest.approx(townes_profile.amplitude, abs=1e-3)
    r = np.linspace(0.0, 8.0, 81)
    assert np.max(np.abs(finer.evaluate(r) - townes_profile.evaluate(r))) < 1e-3
    assert profile_mass(townes_profile) == pytest.approx(5.8505, rel=1e-3)
