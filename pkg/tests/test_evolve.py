import numpy as np
import pytest

from src.solitonlab.core.exceptions import GuardViolationError
from src.solitonlab.evolve.monitor import ehrenfest_scale, integrated_ehrenfest, invariant_monitor
from src.solitonlab.evolve.runner import evolve_run
from src.solitonlab.evolve.snapshots import SnapshotWriter, read_snapshots
from src.solitonlab.evolve.stepper import EvolutionConfig, strang_step
from src.solitonlab.fields import spectral
from src.solitonlab.fields.field import ComplexField
from src.solitonlab.model.potential import PotentialSpec
from src.solitonlab.profile.family import synthesize
from src.solitonlab.profile.types import SolitonParams


def test_config_validates_inputs():
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(stride=0)
    assert EvolutionConfig(dt=0.01, t_end=1.0).steps == 100


def test_resting_soliton_only_rotates_its_phase(cubic, cubic_profile, line_grid):
    psi0 = synthesize(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    config = EvolutionConfig(dt=0.005, t_end=1.0, stride=50)
    trajectory = evolve_run(psi0, config, None, cubic)
    assert trajectory.completed
    assert trajectory.final_time == pytest.approx(1.0)
    expected = np.exp(1j * 1.0) * psi0.values
    assert np.max(np.abs(trajectory.final.values - expected)) < 1e-5
    assert trajectory.drift("mass") < 1e-12


def test_boosted_soliton_moves_at_its_velocity(cubic, cubic_profile, line_grid):
    psi0 = synthesize(cubic_profile, SolitonParams((-5.0,), (0.5,), 0.0, 1.0), line_grid)
    trajectory = evolve_run(psi0, EvolutionConfig(dt=0.005, t_end=4.0, stride=100), None, cubic)
    for moments in trajectory.moments:
        assert moments.center[0] == pytest.approx(-5.0 + 0.5 * moments.time, abs=1e-6)


def test_strang_step_is_time_reversible(cubic, cubic_profile, line_grid):
    potential = PotentialSpec.cosine(0.1, 0.5, 1)
    psi0 = synthesize(cubic_profile, SolitonParams((1.0,), (0.3,), 0.0, 1.0), line_grid)
    forward = strang_step(psi0, 0.01, potential, cubic)
    back = strang_step(forward, -0.01, potential, cubic)
    assert np.max(np.abs(back.values - psi0.values)) < 1e-12


def test_guard_breach_attaches_partial_trajectory(cubic, cubic_profile, line_grid):
    psi0 = synthesize(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    config = EvolutionConfig(dt=0.01, t_end=0.1, guard_margin=45.0)
    with pytest.raises(GuardViolationError) as caught:
        evolve_run(psi0, config, None, cubic)
    assert caught.value.trajectory.status == "failed"
    assert len(caught.value.trajectory.moments) == 1


def test_observers_see_every_sample(cubic, cubic_profile, line_grid):
    psi0 = synthesize(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    seen = []
    evolve_run(psi0, EvolutionConfig(dt=0.01, t_end=0.1, stride=5), None, cubic, [lambda t, psi: seen.append(t)])
    assert seen == pytest.approx([0.0, 0.05, 0.1])


def test_ehrenfest_residual_is_small_in_slow_potential(cubic, cubic_profile, line_grid):
    potential = PotentialSpec.from_eps("cosine", 0.05, 0.1, 1)
    psi0 = synthesize(cubic_profile, SolitonParams((1.0,), (0.0,), 0.0, 1.0), line_grid)
    trajectory = evolve_run(psi0, EvolutionConfig(dt=0.005, t_end=2.0, stride=10), potential, cubic)
    records = list(invariant_monitor(trajectory, potential))
    assert len(records) == len(trajectory.moments) - 2
    assert integrated_ehrenfest(records) < 1e-3
    assert records[0].as_row()["kind"] == "conservation"


def test_ehrenfest_scale_without_force():
    assert ehrenfest_scale(None, 2.0) == 1.0
    assert ehrenfest_scale(PotentialSpec.zero(1), 2.0) == 1.0


def test_snapshots_read_back(cubic_profile, line_grid, tmp_path):
    psi = synthesize(cubic_profile, SolitonParams((0.5,), (0.2,), 0.1, 1.0), line_grid)
    path = tmp_path / "snapshots.bin"
    with SnapshotWriter(path) as writer:
        writer(0.0, psi)
        writer(0.5, psi)
    frames = list(read_snapshots(path))
    assert [time for time, _ in frames] == [0.0, 0.5]
    assert np.array_equal(frames[1][1].values, psi.values)


def test_mass_drift_over_ten_thousand_steps(cubic, cubic_profile, line_grid):
    potential = PotentialSpec.cosine(0.1, 0.05, 1)
    psi0 = synthesize(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    trajectory = evolve_run(psi0, EvolutionConfig(dt=0.01, t_end=100.0, stride=1000), potential, cubic)
    assert trajectory.completed
    assert len(trajectory.moments) == 11
    assert trajectory.drift("mass") < 1e-12


def _boost(values, grid, velocity, time):
    moved = spectral.shift_values(values, grid, np.array([velocity * time]))
    return np.exp(1j * (0.5 * velocity * grid.axis - 0.25 * velocity**2 * time)) * moved


def test_evolution_commutes_with_galilean_boost(cubic, cubic_profile, line_grid):
    # Boost phase e^{ivx/2} must be periodic on the box.
    velocity = 2.0 * 4.0 * np.pi / (2.0 * line_grid.half_extent)
    x = line_grid.axis
    values = cubic_profile.evaluate(np.abs(x)) * (1.0 + 0.05 * np.exp(-((x - 1.0) ** 2)) * (1.0 + 1j))
    psi0 = ComplexField(line_grid, values)
    t_end = 2.0
    config = EvolutionConfig(dt=0.005, t_end=t_end, stride=400)

    evolved = evolve_run(psi0, config, None, cubic).final.values
    boosted_after = _boost(evolved, line_grid, velocity, t_end)
    boosted_first = ComplexField(line_grid, _boost(values, line_grid, velocity, 0.0))
    boosted_before = evolve_run(boosted_first, config, None, cubic).final.values
    residual = np.sqrt(spectral.l2_squared(boosted_after - boosted_before, line_grid))
    assert residual < 1e-8 * np.sqrt(spectral.l2_squared(values, line_grid))
