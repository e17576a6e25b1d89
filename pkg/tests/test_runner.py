import json

import pytest

from src.solitonlab.core.debug import get_trace
from src.solitonlab.core.exceptions import RunStageError
from src.solitonlab.harness.loader import parse_config
from src.solitonlab.harness.runner import certify, run_experiment

FREE = {
    "grid": {"points": 1024},
    "initial": {"position": [-2.0], "velocity": [0.4], "mu": 1.0},
    "evolution": {"dt": 0.01, "t_end": 1.0, "checkpoint": 0.5},
    "tracking": {"stride": 10},
    "run": {"name": "free"},
}


def _stream(summary):
    path = f"{summary.output_dir}/stream.jsonl"
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


def test_certify_writes_certificate_artifacts(tmp_path):
    summary = certify(parse_config(FREE), output_root=tmp_path)
    assert summary.status == "certified"
    assert summary.exit_code == 0
    assert summary.spectrum["negative_counts"]["L1"] == 1
    assert 0 < summary.spectrum["rho"] <= 1.0
    assert summary.mass_curve["stability"] == "pass"
    for name in ("conditions.txt", "profile.txt", "spectrum.txt", "summary.json", "config.resolved.json"):
        assert (tmp_path / summary.output_dir.split("/")[-1] / name).is_file()
    kinds = [record["kind"] for record in _stream(summary)]
    assert kinds == ["spectrum"]


def test_supercritical_power_is_not_certified(tmp_path):
    data = {**FREE, "nonlinearity": {"kind": "power", "exponent": 3.0}}
    with pytest.raises(RunStageError) as caught:
        run_experiment(parse_config(data), output_root=tmp_path)
    assert caught.value.stage == "conditions"
    assert caught.value.exit_code == 3
    written = list(tmp_path.glob("free-*/summary.json"))
    summary = json.loads(written[0].read_text())
    assert summary["status"] == "not_certified"
    assert summary["stage"] == "conditions"
    assert summary["exit_code"] == 3
    stages = get_trace(summary["run_id"])["stages"]
    assert [(entry["stage"], entry["status"]) for entry in stages] == [("conditions", "failed")]


@pytest.mark.slow
def test_free_run_tracks_straight_line(tmp_path):
    summary = run_experiment(parse_config(FREE), output_root=tmp_path)
    assert summary.status == "completed"
    assert summary.horizon_reached == pytest.approx(1.0)
    assert summary.samples == 11
    assert summary.initial_distance < 1e-12
    observables = summary.observables
    assert observables["deviation_a"] < 1e-4
    assert observables["deviation_a_checkpoint"] <= observables["deviation_a"]
    assert observables["alpha_sup"] < 1e-3
    assert observables["mu_drift"] < 1e-5
    assert observables["mass_drift"] < 1e-10

    kinds = [record["kind"] for record in _stream(summary)]
    assert kinds[0] == "spectrum"
    assert kinds.count("sample") == 11
    assert kinds.count("modulation") == 11
    assert kinds.count("conservation") == 9
    for name in ("effective.csv", "deviation.txt"):
        assert (tmp_path / summary.output_dir.split("/")[-1] / name).is_file()
    trace = get_trace(summary.run_id)
    assert trace["summary"]["status"] == "completed"
    assert [entry["stage"] for entry in trace["stages"]] == [
        "conditions",
        "profile",
        "spectrum",
        "evolve",
        "modulation",
        "effective",
    ]
    assert all(entry["status"] == "ok" for entry in trace["stages"])


@pytest.mark.slow
def test_rerun_replaces_previous_stream(tmp_path):
    config = parse_config({**FREE, "evolution": {"dt": 0.01, "t_end": 0.2}})
    first = run_experiment(config, output_root=tmp_path)
    second = run_experiment(config, output_root=tmp_path)
    assert first.output_dir == second.output_dir
    assert [record["kind"] for record in _stream(second)].count("sample") == 3


@pytest.mark.slow
def test_snapshots_are_recorded_when_enabled(tmp_path):
    config = parse_config({**FREE, "evolution": {"dt": 0.01, "t_end": 0.2, "snapshots": True}})
    summary = run_experiment(config, output_root=tmp_path)
    assert (tmp_path / summary.output_dir.split("/")[-1] / "snapshots.bin").stat().st_size > 0
