import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hybridstream.service.app import create_app
from hybridstream.weighting import closed_form_two_model


@pytest.fixture()
def client():
    return TestClient(create_app())


SMALL_RUN = {
    "scenario": "none",
    "deployment": "local",
    "weighting": "dynamic",
    "windows": 2,
    "window_rule": "count:60",
    "fidelity": "desk",
    "seed": 3,
    "data": "synth",
    "wait": True,
}


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"


class TestWeightFit:
    def test_matches_closed_form(self, client):
        rng = np.random.default_rng(0)
        y = rng.normal(size=40)
        speed = y + 0.3 * rng.normal(size=40)
        batch = y + 0.5 * rng.normal(size=40)
        body = client.post(
            "/weights/fit", json={"speed": speed.tolist(), "batch": batch.tolist(), "truth": y.tolist()}
        ).json()
        assert body["converged"]
        assert body["weight_speed"] + body["weight_batch"] == pytest.approx(1.0)
        assert body["weight_speed"] == pytest.approx(closed_form_two_model(batch, speed, y), abs=1e-6)
        assert body["closed_form_weight_speed"] == pytest.approx(body["weight_speed"], abs=1e-6)

    def test_length_mismatch_is_config_error(self, client):
        resp = client.post("/weights/fit", json={"speed": [1.0], "batch": [1.0, 2.0], "truth": [1.0]})
        assert resp.status_code == 400
        assert resp.json()["detail"]["error_kind"] == "config"


class TestBoxplot:
    def test_five_point(self, client):
        body = client.post("/stats/boxplot", json={"values": [1, 2, 3, 4, 5]}).json()
        assert body["median"] == 3 and body["q1"] == 2 and body["q3"] == 4

    def test_empty_rejected_by_validation(self, client):
        assert client.post("/stats/boxplot", json={"values": []}).status_code == 422


class TestRuns:
    def test_synchronous_run_returns_summary(self, client):
        resp = client.post("/runs", json=SMALL_RUN)
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "done"
        assert body["summary"]["n_windows"] == 2

    def test_report_bundle(self, client):
        run_id = client.post("/runs", json=SMALL_RUN).json()["run_id"]
        bundle = client.get(f"/runs/{run_id}/report").json()
        assert bundle["summary"]["n_windows"] == 2
        assert bundle["windows_csv"].startswith("window_index,")
        assert bundle["latency_csv"].startswith("phase,")

    def test_async_run_lifecycle(self, client):
        body = client.post("/runs", json={**SMALL_RUN, "wait": False}).json()
        assert body["status"] in ("queued", "running")
        run_id = body["run_id"]
        for _ in range(200):
            record = client.get(f"/runs/{run_id}").json()
            if record["status"] == "done":
                break
            time.sleep(0.05)
        assert record["status"] == "done"
        assert run_id in client.get("/runs").json()

    def test_config_error_returns_400(self, client):
        resp = client.post("/runs", json={**SMALL_RUN, "weighting": "static:0.9:0.5"})
        assert resp.status_code == 400
        assert resp.json()["detail"]["error_kind"] == "config"

    def test_placement_error_returns_409(self, client):
        resp = client.post(
            "/runs",
            json={**SMALL_RUN, "deployment": "edge", "topology": "pi-lab", "window_rule": "count:60"},
        )
        assert resp.status_code == 409
        assert resp.json()["detail"]["error_kind"] == "placement"

    def test_unknown_run_404(self, client):
        assert client.get("/runs/run-999999").status_code == 404

    def test_unknown_scenario_schema_validation(self, client):
        assert client.post("/runs", json={**SMALL_RUN, "scenario": "sideways"}).status_code == 422
