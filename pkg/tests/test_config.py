import json

import numpy as np
import pytest

from src.solitonlab.core.exceptions import ConfigError
from src.solitonlab.fields import spectral
from src.solitonlab.harness.initial import initial_distance, initial_field, perturbation_shape
from src.solitonlab.harness.loader import load_config, parse_config, resolved_config, run_id
from src.solitonlab.harness.outputs import RunDirectory, dumps
from src.solitonlab.modulation.decompose import rest_frame

BASE = {
    "grid": {"dimension": 1, "points": 1024, "half_extent": 40.0},
    "potential": {"family": "cosine", "eps_v": 0.05, "amplitude": 0.1},
    "initial": {"position": [1.0], "velocity": [0.2], "mu": 1.0},
    "evolution": {"dt": 0.01, "t_end": 2.0},
    "run": {"name": "unit"},
}


def _with(section, **values):
    data = json.loads(json.dumps(BASE))
    data.setdefault(section, {}).update(values)
    return data


def test_defaults_fill_every_block():
    config = parse_config({"evolution": {"t_end": 1.0}})
    assert config.dimension == 1
    assert config.grid.points == 2048
    assert config.grid.half_extent == 40.0
    assert config.nonlinearity.kind == "power"
    assert config.potential.family == "zero"
    assert config.evolution_config().stride == 10


def test_invalid_frequency_names_the_field():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("initial", mu=-1.0))
    assert any(problem.startswith("initial.mu") for problem in caught.value.problems)


def test_negative_perturbation_size_is_rejected():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("initial", eps0=-0.1))
    assert any("initial.eps0" in problem for problem in caught.value.problems)


def test_frequency_outside_parameter_interval_is_rejected():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("initial", mu=3.0))
    assert any("outside parameters" in problem for problem in caught.value.problems)


def test_unknown_keys_follow_strictness():
    data = _with("evolution", stepsize=0.1)
    with pytest.raises(ConfigError):
        parse_config(data, strict=True)
    assert parse_config(data, strict=False).evolution.dt == 0.01


def test_soliton_outside_guard_is_rejected():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("initial", position=[35.0]))
    assert any(problem.startswith("initial.position") for problem in caught.value.problems)


def test_time_step_must_resolve_potential_scale():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("evolution", dt=0.5))
    assert any(problem.startswith("evolution.dt") for problem in caught.value.problems)


def test_potential_needs_exactly_one_parameterization():
    with pytest.raises(ConfigError):
        parse_config(_with("potential", rate=[0.5]))


def test_vector_length_must_match_dimension():
    with pytest.raises(ConfigError) as caught:
        parse_config(_with("initial", velocity=[0.1, 0.2]))
    assert any("initial.velocity" in problem for problem in caught.value.problems)


def test_horizon_sets_end_time_when_unset():
    data = _with("evolution", t_end=None, horizon=2.0)
    data["initial"]["eps0"] = 0.1
    data["initial"]["perturbation"] = "bump"
    config = parse_config(data)
    assert config.t_end() == pytest.approx(2.0 / (0.05 + 0.01))


def test_position_in_potential_units():
    config = parse_config(_with("initial", position=[2.0], position_scale="potential"))
    rate = config.build_potential().rate[0]
    assert config.sigma0().a[0] == pytest.approx(2.0 / rate)


def test_sweep_value_replaces_one_parameter():
    config = parse_config(BASE)
    swept = config.with_value("eps_V", 0.025)
    assert swept.build_potential().eps_v == pytest.approx(0.025)
    assert swept.run.name == "unit-eps_V-0.025"
    assert config.with_value("dt", 0.005).evolution.dt == 0.005
    with pytest.raises(ValueError):
        config.with_value("grid", 1.0)


def test_run_id_is_stable_and_sensitive():
    first = parse_config(BASE)
    again = parse_config(json.loads(json.dumps(BASE)))
    assert run_id(first) == run_id(again)
    assert run_id(first) != run_id(first.with_value("dt", 0.005))
    resolved = resolved_config(first)
    assert resolved["run_id"] == run_id(first)
    assert resolved["derived"]["t_end"] == 2.0


def test_load_config_reads_toml(tmp_path):
    path = tmp_path / "study.toml"
    path.write_text('[initial]\nmu = 1.5\n\n[run]\nname = "toml"\n\n[evolution]\nt_end = 1.0\n', encoding="utf-8")
    config = load_config(path)
    assert config.initial.mu == 1.5
    assert config.run.name == "toml"


def test_load_config_reports_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[initial\nmu = ", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_initial_field_has_requested_distance(cubic_profile, line_grid):
    data = _with("initial", perturbation="bump", eps0=0.02, bump_center=[0.5])
    data["grid"]["points"] = 2048
    config = parse_config(data)
    psi0, q = initial_field(config, cubic_profile, line_grid)
    assert np.sqrt(spectral.h1_squared(q.values, line_grid)) == pytest.approx(0.02, rel=1e-10)
    frame = rest_frame(cubic_profile, line_grid)
    assert max(abs(spectral.symplectic_values(q.values, z.values, line_grid)) for z in frame) < 1e-12
    assert initial_distance(psi0, cubic_profile, config) == pytest.approx(0.02, rel=1e-8)


def test_unperturbed_initial_field_is_the_soliton(cubic_profile, line_grid):
    config = parse_config(BASE)
    psi0, q = initial_field(config, cubic_profile, line_grid)
    assert not np.any(q.values)
    assert initial_distance(psi0, cubic_profile, config) < 1e-12


def test_random_perturbation_is_seeded_and_band_limited(line_grid):
    data = _with("initial", perturbation="random", eps0=0.01)
    config = parse_config(data)
    first = perturbation_shape(config, line_grid, 1.0)
    assert np.array_equal(first, perturbation_shape(config, line_grid, 1.0))
    data["run"]["seed"] = 7
    assert not np.array_equal(first, perturbation_shape(parse_config(data), line_grid, 1.0))


def test_dumps_turns_non_finite_numbers_into_null():
    payload = json.loads(dumps({"a": np.float64("nan"), "b": np.arange(2), "c": np.bool_(True)}))
    assert payload == {"a": None, "b": [0, 1], "c": True}


def test_run_directory_restarts_the_stream(tmp_path):
    directory = RunDirectory(tmp_path, "unit", "abcdef0123456789").prepare()
    assert directory.path.name == "unit-abcdef012345"
    with directory.stream() as stream:
        stream.write({"kind": "sample", "t": 0.0})
    RunDirectory(tmp_path, "unit", "abcdef0123456789").prepare()
    assert not directory.file("stream.jsonl").exists()
    assert directory.written == [directory.file("stream.jsonl")]


def test_free_run_needs_an_explicit_end_time():
    with pytest.raises(ConfigError) as caught:
        parse_config({})
    assert any(problem.startswith("evolution.t_end") for problem in caught.value.problems)
