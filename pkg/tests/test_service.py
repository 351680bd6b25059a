import copy
import csv
import time

import pytest
import yaml
from fastapi.testclient import TestClient

from cookieless_ab.cli import main
from cookieless_ab.service import create_app


BASE_DOC = {
    "design": {"alpha": 0.75, "cluster_salt": 3},
    "synthetic": {
        "mu": {"1,0": 1.0, "2,0": 0.0, "1,3": 1.5, "2,3": 0.2},
        "delta1": 0.5,
        "delta2": -0.5,
        "p_overlap": 0.5,
        "n_users": 400,
        "n_reps": 2,
        "seed": 11,
    },
    "sweep": {"axis": "p_overlap", "values": [0.0, 0.5]},
    "methods": ["uncorrected", "corrected"],
}


def make_doc(**synthetic_overrides):
    doc = copy.deepcopy(BASE_DOC)
    doc["synthetic"].update(synthetic_overrides)
    return doc


@pytest.fixture()
def client(tmp_path):
    with TestClient(create_app(tmp_path / "state")) as c:
        yield c


def wait_terminal(client, run_id, timeout=60.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/api/runs/{run_id}").json()
        if state["status"] in {"complete", "failed"}:
            return state
        time.sleep(0.02)
    raise AssertionError(f"run {run_id} did not finish within {timeout}s")


def test_design_validation_round_trip(client):
    resp = client.post("/api/designs", json={"alpha": 0.6, "cluster_salt": 9})
    assert resp.status_code == 200
    design = resp.json()["design"]
    assert design["alpha"] == 0.6
    assert design["allocation"]["C1"]["site2_arm3"] == 0.6
    assert design["allocation"]["C2"]["site2_arm3"] == 0.4
    assert design["treatment_labels"] == ["T1", "T2", "T3", "T4"]


def test_design_rejects_unidentified_alpha(client):
    resp = client.post("/api/designs", json={"alpha": 0.5})
    assert resp.status_code == 400
    body = resp.json()
    assert body["error"] == "invalid config"
    assert any("eps_alpha" in issue["message"] for issue in body["issues"])


def test_design_rejects_non_numeric_alpha(client):
    resp = client.post("/api/designs", json={"alpha": "most"})
    assert resp.status_code == 400
    assert resp.json()["issues"][0]["field"] == "alpha"


def test_run_lifecycle(client):
    resp = client.post("/api/runs", json=BASE_DOC)
    assert resp.status_code == 202
    run_id = resp.json()["run_id"]
    assert resp.json()["status"] == "pending"

    state = wait_terminal(client, run_id)
    assert state["status"] == "complete"
    assert state["axis"] == "p_overlap"
    rows = state["rows"]
    assert len(rows) == 2 * 2
    assert {row["method"] for row in rows} == {"uncorrected", "corrected"}
    assert all("mean_estimate" in row and "bias" in row for row in rows)
    for row in rows:
        # the band is precomputed so UI clients never derive statistics
        assert row["band_lo"] <= row["mean_estimate"] <= row["band_hi"]
        assert row["band_half_width"] == pytest.approx(
            3.0 * row["std_error"] / row["n_reps"] ** 0.5, abs=1e-12
        )
    assert state["failures"] == []

    listing = client.get("/api/runs").json()["runs"]
    assert [r["run_id"] for r in listing] == [run_id]
    assert listing[0]["axis"] == "p_overlap"
    assert listing[0]["n_values"] == 2


def test_duplicate_after_completion_returns_200(client):
    run_id = client.post("/api/runs", json=BASE_DOC).json()["run_id"]
    wait_terminal(client, run_id)
    resp = client.post("/api/runs", json=BASE_DOC)
    assert resp.status_code == 200
    assert resp.json() == {"run_id": run_id, "status": "complete"}


def test_duplicate_in_flight_returns_409(client):
    doc = make_doc(n_users=120_000, n_reps=16)
    first = client.post("/api/runs", json=doc)
    assert first.status_code == 202
    run_id = first.json()["run_id"]
    dup = client.post("/api/runs", json=doc)
    assert dup.status_code == 409
    assert dup.json()["run_id"] == run_id
    assert "in flight" in dup.json()["error"]
    wait_terminal(client, run_id)  # drain before teardown


def test_unknown_run_is_404(client):
    resp = client.get("/api/runs/deadbeefdeadbeef")
    assert resp.status_code == 404
    assert "unknown" in resp.json()["error"]


def test_invalid_config_is_400_with_field_paths(client):
    doc = copy.deepcopy(BASE_DOC)
    doc["design"]["alpha"] = 0.5
    doc["sweep"]["axis"] = "gamma"
    resp = client.post("/api/runs", json=doc)
    assert resp.status_code == 400
    fields = {issue["field"] for issue in resp.json()["issues"]}
    assert "design" in fields
    assert "sweep.axis" in fields


def test_malformed_body_is_400(client):
    resp = client.post("/api/runs", json=[1, 2, 3])
    assert resp.status_code == 400
    resp = client.post(
        "/api/runs", content=b"not json", headers={"content-type": "application/json"}
    )
    assert resp.status_code == 400


def test_grid_point_failures_survive_in_state(client):
    doc = copy.deepcopy(BASE_DOC)
    doc["sweep"]["values"] = [0.5, 1.5]  # second point is out of range
    run_id = client.post("/api/runs", json=doc).json()["run_id"]
    state = wait_terminal(client, run_id)
    assert state["status"] == "complete"
    assert len(state["failures"]) == 1
    assert state["failures"][0]["value"] == 1.5
    assert {row["value"] for row in state["rows"]} == {0.5}


def test_completed_runs_survive_restart(tmp_path):
    state_dir = tmp_path / "state"
    with TestClient(create_app(state_dir)) as client:
        run_id = client.post("/api/runs", json=BASE_DOC).json()["run_id"]
        first = wait_terminal(client, run_id)

    with TestClient(create_app(state_dir)) as client:
        again = client.get(f"/api/runs/{run_id}")
        assert again.status_code == 200
        reloaded = again.json()
        assert reloaded["status"] == "complete"
        assert reloaded["rows"] == first["rows"]
        assert [r["run_id"] for r in client.get("/api/runs").json()["runs"]] == [run_id]


def test_service_and_cli_agree_exactly(tmp_path):
    with TestClient(create_app(tmp_path / "state")) as client:
        run_id = client.post("/api/runs", json=BASE_DOC).json()["run_id"]
        state = wait_terminal(client, run_id)

    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump(BASE_DOC))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == 0

    with open(out / "results.csv") as fh:
        cli_rows = {
            (float(r["value"]), r["method"]): r for r in csv.DictReader(fh)
        }
    assert len(cli_rows) == len(state["rows"])
    for row in state["rows"]:
        cli = cli_rows[(row["value"], row["method"])]
        assert float(cli["mean_estimate"]) == row["mean_estimate"]
        assert float(cli["bias"]) == row["bias"]
        assert float(cli["std_error"]) == row["std_error"]
        assert float(cli["band_lo"]) == row["band_lo"]
        assert float(cli["band_hi"]) == row["band_hi"]
        assert int(cli["n_reps"]) == row["n_reps"]


def test_static_mount_serves_ui_files(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>ab console</title>")
    with TestClient(create_app(tmp_path / "state", static_dir=ui)) as client:
        page = client.get("/")
        assert page.status_code == 200
        assert "ab console" in page.text
        # API routes keep precedence over the static mount
        assert client.get("/api/runs").json() == {"runs": []}
