import csv

import numpy as np
import pytest

from src.solitonlab.core.exceptions import WindowMismatchError
from src.solitonlab.effective.compare import compare_trajectories
from src.solitonlab.effective.newton import newton_flow, particle_energy
from src.solitonlab.fields.field import ComplexField
from src.solitonlab.fields.grid import SpatialGrid
from src.solitonlab.model.potential import PotentialSpec
from src.solitonlab.modulation.records import ModulationState
from src.solitonlab.profile.types import SolitonParams

SMALL = SpatialGrid(1, 20.0, 16)


def _states(sigmas, times):
    zero = ComplexField.zeros(SMALL)
    return [
        ModulationState(time=float(t), sigma=s, w=zero, w_l2=0.0, w_h1=0.0, iterations=0, constraint_residual=0.0)
        for t, s in zip(times, sigmas)
    ]


def test_free_flow_matches_closed_form():
    sigma0 = SolitonParams((-2.0,), (0.6,), 0.1, 1.3)
    trajectory = newton_flow(sigma0, None, 5.0, 0.1)
    t = trajectory.times
    assert trajectory.substeps == 1
    assert np.allclose(trajectory.positions[:, 0], -2.0 + 0.6 * t, atol=1e-13)
    assert np.allclose(trajectory.velocities[:, 0], 0.6)
    assert np.allclose(trajectory.phases, 0.1 + (1.3 + 0.09) * t, atol=1e-12)
    assert trajectory.final().mu == 1.3


def test_flow_is_time_reversible():
    potential = PotentialSpec.from_eps("cosine", 0.05, 0.1, 1)
    sigma0 = SolitonParams((1.0,), (0.2,), 0.0, 1.0)
    forward = newton_flow(sigma0, potential, 20.0, 0.05)
    end = forward.final()
    back = newton_flow(end.replace(v=tuple(-x for x in end.v)), potential, 20.0, 0.05)
    assert back.positions[-1, 0] == pytest.approx(1.0, abs=1e-6)
    assert back.velocities[-1, 0] == pytest.approx(-0.2, abs=1e-6)


def test_backward_integration_retraces_forward_flow():
    potential = PotentialSpec.from_eps("cosine", 0.05, 0.1, 1)
    sigma0 = SolitonParams((1.0,), (0.2,), 0.0, 1.0)
    end = newton_flow(sigma0, potential, 10.0, 0.05).final()
    back = newton_flow(end, potential, -10.0, 0.05)
    assert back.times[-1] == pytest.approx(-10.0)
    assert back.positions[-1, 0] == pytest.approx(1.0, abs=1e-6)
    assert back.phases[-1] == pytest.approx(0.0, abs=1e-6)


def test_particle_energy_is_conserved():
    potential = PotentialSpec.from_eps("cosine", 0.1, 0.1, 2)
    sigma0 = SolitonParams((0.5, -1.0), (0.1, 0.3), 0.0, 1.0)
    trajectory = newton_flow(sigma0, potential, 50.0, 0.05)
    assert trajectory.energies[0] == pytest.approx(particle_energy(sigma0, potential))
    assert trajectory.energy_drift < 1e-6
    assert trajectory.dimension == 2


def test_small_oscillation_period_in_gaussian_well():
    potential = PotentialSpec.gaussian_well(0.1, 0.2, 1)
    omega = np.sqrt(2.0 * 0.1 * 0.04)
    period = 2.0 * np.pi / omega
    sigma0 = SolitonParams((0.01,), (0.0,), 0.0, 1.0)
    trajectory = newton_flow(sigma0, potential, period, period / 400)
    assert trajectory.positions[-1, 0] == pytest.approx(0.01, rel=1e-3)


def test_substeps_respect_potential_scale():
    potential = PotentialSpec.from_eps("cosine", 0.45, 0.1, 1)
    trajectory = newton_flow(SolitonParams.at_rest(1.0), potential, 1.0, 0.1)
    assert trajectory.substeps == 5


def test_newton_flow_rejects_non_positive_step():
    with pytest.raises(ValueError):
        newton_flow(SolitonParams.at_rest(1.0), None, 1.0, 0.0)


def test_trajectory_csv_has_header_and_rows(tmp_path):
    trajectory = newton_flow(SolitonParams((0.0,), (0.5,), 0.0, 1.0), None, 1.0, 0.25)
    path = trajectory.to_csv(tmp_path / "newton.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "a0", "v0", "gamma", "mu"]
    assert len(rows) == 6
    assert float(rows[-1][1]) == pytest.approx(0.5)


def test_compare_identical_trajectories_has_no_deviation():
    effective = newton_flow(SolitonParams((0.0,), (0.5,), 0.0, 1.0), None, 4.0, 0.1)
    indices = range(0, effective.times.size, 5)
    tracked = _states([effective.sigma_at(i) for i in indices], effective.times[list(indices)])
    report = compare_trajectories(tracked, effective, checkpoint=2.0)
    assert report.position < 1e-12
    assert report.velocity < 1e-12
    assert report.phase < 1e-12
    assert report.frequency == 0.0
    assert report.position_checkpoint < 1e-12
    assert report.as_dict()["samples"] == len(tracked)


def test_compare_interpolates_between_samples():
    effective = newton_flow(SolitonParams((0.0,), (0.5,), 0.0, 1.0), None, 4.0, 0.1)
    times = [0.05, 1.234, 3.333]
    sigmas = [SolitonParams((0.5 * t + 0.01,), (0.5,), (1.0 + 0.0625) * t, 1.02) for t in times]
    report = compare_trajectories(_states(sigmas, times), effective, checkpoint=1.3)
    assert report.position == pytest.approx(0.01, abs=1e-12)
    assert report.frequency == pytest.approx(0.02)
    assert report.frequency_checkpoint == pytest.approx(0.02)
    assert "sup|a - a_N|" in report.to_text()


def test_compare_rejects_samples_outside_window():
    effective = newton_flow(SolitonParams.at_rest(1.0), None, 1.0, 0.1)
    tracked = _states([SolitonParams.at_rest(1.0)], [1.5])
    with pytest.raises(WindowMismatchError):
        compare_trajectories(tracked, effective)
    with pytest.raises(WindowMismatchError):
        compare_trajectories([], effective)


def test_compare_rejects_dimension_mismatch():
    effective = newton_flow(SolitonParams.at_rest(1.0, 2), None, 1.0, 0.1)
    tracked = _states([SolitonParams.at_rest(1.0)], [0.5])
    with pytest.raises(WindowMismatchError):
        compare_trajectories(tracked, effective)
