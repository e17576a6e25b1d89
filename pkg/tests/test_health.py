from fastapi.testclient import TestClient

from src.solitonlab.main import create_app


def test_health():
    client = TestClient(create_app())
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_unknown_trace_is_not_found():
    client = TestClient(create_app())
    resp = client.get("/debug/trace/does-not-exist")
    assert resp.status_code == 404


def test_profile_endpoint_reports_mass():
    client = TestClient(create_app())
    resp = client.post("/profile", json={"mu": 1.0, "dimension": 1})
    assert resp.status_code == 200
    assert abs(resp.json()["mass"] - 2.0) < 1e-6


def test_profile_endpoint_rejects_bad_frequency():
    client = TestClient(create_app())
    assert client.post("/profile", json={"mu": -1.0}).status_code == 422


def test_runs_endpoint_maps_config_errors():
    client = TestClient(create_app())
    resp = client.post("/runs", json={"config": {"initial": {"mu": -1.0}}})
    assert resp.status_code == 422
    assert any("initial.mu" in problem for problem in resp.json()["detail"]["problems"])


def test_metrics_label_requests_by_route_template():
    client = TestClient(create_app())
    client.get("/debug/trace/abc123")
    body = client.get("/metrics").text
    assert 'path="/debug/trace/{run_id}"' in body
    assert 'path="/debug/trace/abc123"' not in body
