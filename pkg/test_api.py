"""
Tests for the HTTP API.
"""
import math

import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.models.assemblage import AssemblagePayload
from app.services.bridge import assemblage_of
from app.services.hermitian import max_norm
from app.services.measurements import standard_set
from app.services.steering import lhs_feasible


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["docs"] == "/docs"


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] in ("healthy", "degraded")
    assert "solver_installed" in body


def test_jm_check(client):
    response = client.post("/api/v1/jm/check", json={"stdlib": "pauli_xz", "params": {"eta": 0.7}})
    assert response.status_code == 200
    assert response.json()["verdict"] == "jointly_measurable"


def test_jm_robustness(client):
    response = client.post("/api/v1/jm/robustness", json={"stdlib": "pauli_xyz"})
    assert response.status_code == 200
    assert response.json()["lambda_max"] == pytest.approx(1 / math.sqrt(3), abs=1e-5)


def test_jm_parent(client):
    response = client.post("/api/v1/jm/parent", json={"stdlib": "pauli_xz", "lam": 0.7})
    assert response.status_code == 200
    assert len(response.json()["outcomes"]) == 4


def test_missing_source_is_unprocessable(client):
    response = client.post("/api/v1/jm/check", json={})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "SchemaError"


def test_steer_robustness_from_stdlib(client):
    response = client.post("/api/v1/steer/robustness", json={"stdlib": "pauli_xz"})
    assert response.status_code == 200
    assert response.json()["lambda_max"] == pytest.approx(1 / math.sqrt(2), abs=1e-5)


def test_bridge_round_trip(client):
    asm = client.post("/api/v1/bridge/to-assemblage", json={"stdlib": "coexistence_c3_pair"}).json()
    assert asm["dimB"] == 3
    steer = client.post("/api/v1/steer/check", json={"assemblage": asm})
    assert steer.json()["verdict"] == "steerable"
    back = client.post("/api/v1/bridge/to-measurements", json={"assemblage": asm})
    assert back.status_code == 200
    assert back.json()["dim"] == 3


def test_rounded_coexistence_assemblage_keeps_its_witness(client):
    asm = client.post("/api/v1/bridge/to-assemblage", json={"stdlib": "coexistence_c3_pair"}).json()
    decoded = AssemblagePayload.model_validate(asm).to_domain()
    exact = assemblage_of(standard_set("coexistence_c3_pair"))
    assert max(max_norm(a, b) for ra, rb in zip(decoded.members, exact.members) for a, b in zip(ra, rb)) < 1e-9
    feasible, certificate = lhs_feasible(decoded)
    assert not feasible
    assert certificate.separation > 0
    response = client.post("/api/v1/steer/check", json={"assemblage": asm})
    assert response.status_code == 200
    assert response.json()["verdict"] == "steerable"


def test_threshold(client):
    response = client.get("/api/v1/bridge/threshold/4")
    assert response.json()["lambda_star_exact"] == "13/36"
    assert client.get("/api/v1/bridge/threshold/1").status_code == 422


def test_duality_check(client):
    state = [[[0.5 if i == j and i in (0, 3) else 0.0, 0.0] for j in range(4)] for i in range(4)]
    state[0][3] = state[3][0] = [0.5, 0.0]
    response = client.post(
        "/api/v1/bridge/duality-check",
        json={"stdlib": "pauli_xz", "state": {"dims": [2, 2], "matrix": state}, "lam": 0.3},
    )
    assert response.status_code == 200
    assert response.json()["passed"]


def test_ft_eval(client):
    response = client.post("/api/v1/ft/eval", json={"x1": [0.6, 0, 0], "x2": [0, 0.6, 0], "x3": [0, 0, 0.6]})
    body = response.json()
    assert body["verdict"] == "steerable"
    assert body["value"] == pytest.approx(2.4 * math.sqrt(3), abs=1e-9)


def test_ft_eval_rejects_two_measurements(client):
    response = client.post("/api/v1/ft/eval", json={"stdlib": "pauli_xz"})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "DimensionMismatch"


def test_lhv_decompose(client):
    response = client.post("/api/v1/lhv/decompose", json={"s": 1 / math.sqrt(2), "lam": 0.6, "classes": ["noisy_bell"]})
    assert response.status_code == 200
    assert response.json()["feasible"]


def test_stdlib(client):
    assert "mub" in client.get("/api/v1/stdlib/").json()
    response = client.post("/api/v1/stdlib/mub", json={"d": 3, "count": 2})
    assert response.json()["dim"] == 3
    assert client.post("/api/v1/stdlib/nothing").status_code == 422
