import numpy as np
import pytest
from fastapi.testclient import TestClient
from main import app
from tests.conftest import make_series

client = TestClient(app)


def _payload(series):
    return {"values": series.values.tolist(), "s_grid": series.s_grid.tolist()}


@pytest.fixture
def small_series():
    rng = np.random.default_rng(3)
    series = make_series(lambda t, s: 1.0 + t * s, 80)
    return series.model_copy(update={"values": series.values + 0.1 * rng.standard_normal(series.values.shape)})


def test_health_check():
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_relevant_change_test(small_series):
    response = client.post("/api/analysis/test", json={
        "series": _payload(small_series),
        "delta": 5.0,
        "alpha": 0.1,
        "config": {"bandwidth": 0.2, "boot": 50, "seed": 2},
    })
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["reject"] is False
    assert body["delta"] == 5.0
    assert body["reject"] == (body["T"] > body["quantile"])
    assert body["first_time"]["global"] is None


def test_ragged_series_is_a_shape_error():
    response = client.post("/api/analysis/test", json={
        "series": {"values": [[1.0, 2.0, 3.0], [1.0, 2.0]], "s_grid": [0.0, 0.5, 1.0]},
        "delta": 1.0,
    })
    assert response.status_code == 400
    assert response.json()["detail"]["code"] == "ShapeMismatch"


def test_invalid_config_is_rejected_by_validation(small_series):
    response = client.post("/api/analysis/test", json={
        "series": _payload(small_series),
        "delta": 1.0,
        "config": {"bandwidth": 0.9},
    })
    assert response.status_code == 422


def test_bandwidth_needs_enough_curves():
    series = make_series(lambda t, s: t + s, 6)
    response = client.post("/api/analysis/bandwidth", json={"series": _payload(series)})
    assert response.status_code == 400
    assert response.json()["detail"]["code"] == "TooFewCurves"


def test_bandwidth_report(small_series):
    response = client.post("/api/analysis/bandwidth", json={
        "series": _payload(small_series), "candidates": [0.15, 0.3], "k": 4,
    })
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["candidates"] == [0.15, 0.3]
    assert body["chosen"] in (0.15, 0.3)


def test_first_time_route(small_series):
    response = client.post("/api/analysis/first-time", json={
        "series": _payload(small_series), "delta": 5.0, "config": {"bandwidth": 0.2, "boot": 50},
    })
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["global"] is None
    assert len(body["per_s"]) == small_series.N


def test_surface_route(small_series):
    response = client.post("/api/analysis/surface", json={
        "series": _payload(small_series), "config": {"bandwidth": 0.2},
    })
    assert response.status_code == 200, response.text
    body = response.json()
    deviation = np.array(body["deviation"])
    assert deviation.shape == (len(body["t_grid"]), len(body["s_grid"]))
    assert body["d_inf"] == pytest.approx(np.abs(deviation).max())


def test_study_route():
    response = client.post("/api/simulation/study", json={
        "n": 40, "points": 11, "reps": 2, "boot": 20, "deltas": [10.0], "bandwidth": 0.2, "seed": 1,
    })
    assert response.status_code == 200, response.text
    rows = response.json()
    assert len(rows) == 1
    assert rows[0]["rejection_rate"] == 0.0
    assert rows[0]["mean"] == "mu1"


def test_study_rejects_custom_mean():
    response = client.post("/api/simulation/study", json={"mean": "custom", "n": 40, "deltas": [1.0]})
    assert response.status_code == 400
    assert response.json()["detail"]["code"] == "InvalidConfig"
