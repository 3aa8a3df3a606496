"""HTTP surface: status mapping, compute endpoints, builder session loop."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from targetwealth.errors import MaxIterations
from targetwealth.service import ServiceConfig, create_app

MARKET = {"mu": 0.07, "r": 0.03, "sigma": 0.2, "horizon": 1.0}


@pytest.fixture(scope="module")
def client():
    app = create_app(ServiceConfig())

    @app.get("/boom")
    def boom():
        raise MaxIterations("iteration budget exhausted")

    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


def test_health(client):
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_feasibility_solves_the_family_parameter(client):
    resp = client.post(
        "/v1/feasibility",
        json={"market": MARKET, "distribution": {"family": "lognormal"}, "x0": 1.0},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["feasible"] is True
    assert body["budget_binding"] is True
    np.testing.assert_allclose(body["solved_parameter"], 0.16, rtol=1e-9)
    np.testing.assert_allclose(body["budget_value"], 1.0, rtol=1e-12)


def test_feasibility_with_explicit_parameter(client):
    base = {"market": MARKET, "distribution": {"family": "lognormal", "b": 0.36}}
    rich = client.post("/v1/feasibility", json={**base, "x0": 1.10}).json()
    poor = client.post("/v1/feasibility", json={**base, "x0": 1.00}).json()
    unpriced = client.post("/v1/feasibility", json=base).json()
    np.testing.assert_allclose(rich["budget_value"], np.exp(0.06), rtol=1e-10)
    assert rich["feasible"] is True and rich["budget_binding"] is False
    assert poor["feasible"] is False
    assert unpriced["feasible"] is True and "budget_binding" not in unpriced


def test_feasibility_intermediate_uses_the_target_time_variance(client):
    resp = client.post(
        "/v1/feasibility",
        json={
            "market": MARKET,
            "distribution": {"family": "lognormal"},
            "x0": 1.0,
            "mode": "intermediate",
            "target_time": 0.5,
        },
    )
    assert resp.status_code == 200
    np.testing.assert_allclose(resp.json()["solved_parameter"], 0.08, rtol=1e-9)


def test_preferences_terminal(client):
    resp = client.post(
        "/v1/preferences",
        json={"market": MARKET, "distribution": {"family": "lognormal"}, "x0": 1.0},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["mode"] == "terminal"
    np.testing.assert_allclose(body["beta"], 2.0, rtol=1e-9)
    wealth = np.array(body["marginal_utility"]["wealth"])
    value = np.array(body["marginal_utility"]["value"])
    assert wealth.size == value.size == 99
    assert np.all(np.diff(wealth) > 0)
    assert np.all(np.diff(value) < 0)
    # β = 2 pins the whole curve: U′(x) = x^{−1/β} with the scale at U′(1) = 1
    np.testing.assert_allclose(value, wealth**-0.5, rtol=1e-8)


def test_preferences_intermediate(client):
    resp = client.post(
        "/v1/preferences",
        json={
            "market": MARKET,
            "distribution": {"family": "lognormal"},
            "x0": 1.0,
            "mode": "intermediate",
            "target_time": 0.5,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["assumptions"] == {"entire": True, "growth_ok": True, "real_nonneg_ok": True}
    v = np.array(body["inverse_marginal"]["v"])
    values = np.array(body["inverse_marginal"]["value"])
    assert v.size == values.size == 81
    np.testing.assert_allclose(values, np.exp(-0.04) * v**-2.0, rtol=1e-8)


def test_preferences_forward(client):
    resp = client.post(
        "/v1/preferences",
        json={"market": MARKET, "distribution": {"family": "lognormal"}, "x0": 1.0, "mode": "forward"},
    )
    assert resp.status_code == 200
    body = resp.json()
    measure = body["measure"]
    assert measure["form"] == "atomic" if "form" in measure else "atoms" in measure
    atoms = measure["atoms"]
    assert len(atoms) == 1
    np.testing.assert_allclose(atoms[0]["y"], 2.0, rtol=1e-6)
    np.testing.assert_allclose(body["normalization"]["tilt_rate"], 0.04, rtol=1e-12)
    value = np.array(body["u0_prime"]["value"])
    assert np.all(value > 0) and np.all(np.diff(value) < 0)


def test_simulate_terminal_with_checks(client):
    resp = client.post(
        "/v1/simulate",
        json={
            "market": MARKET,
            "distribution": {"family": "lognormal"},
            "x0": 1.0,
            "paths": 2000,
            "dt": 0.01,
            "seed": 1,
            "checks": ["martingale", "ks"],
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["checks"]["martingale"]["pass"] is True
    assert body["checks"]["ks"]["pass"] is True
    assert "self_financing" not in body["checks"]
    fan = body["fan"]["wealth"]
    assert set(fan) == {"p5", "p25", "p50", "p75", "p95"}
    assert len(fan["p50"]) == len(body["times"])
    assert fan["p50"][0] == 1.0


def test_refusal_maps_to_422(client):
    resp = client.post(
        "/v1/preferences",
        json={
            "market": MARKET,
            "distribution": {"family": "lognormal", "b": 0.36},
            "x0": 1.0,
        },
    )
    assert resp.status_code == 422
    error = resp.json()["error"]
    assert error["cause"] == "budget_violated"
    np.testing.assert_allclose(error["budget"], np.exp(0.06), rtol=1e-10)
    assert error["x0"] == 1.0


def test_schema_violation_maps_to_400(client):
    resp = client.post(
        "/v1/feasibility",
        json={"market": MARKET, "distribution": {"family": "lognormal"}, "x0": -1.0},
    )
    assert resp.status_code == 400
    error = resp.json()["error"]
    assert error["cause"] == "schema_violation"
    assert any("x0" in loc for item in error["detail"] for loc in item["loc"])


@pytest.mark.parametrize(
    "patch",
    [
        {"distribution": {"family": "no-such-family"}},
        {"mode": "intermediate"},                            # missing target_time
        {"mode": "intermediate", "target_time": 2.0},        # outside the horizon
    ],
)
def test_invalid_request_maps_to_400(client, patch):
    body = {"market": MARKET, "distribution": {"family": "lognormal"}, "x0": 1.0}
    body.update(patch)
    resp = client.post("/v1/feasibility", json=body)
    assert resp.status_code == 400
    assert resp.json()["error"]["cause"] == "invalid_request"


def test_engine_fault_maps_to_500_without_a_traceback(client):
    resp = client.get("/boom")
    assert resp.status_code == 500
    error = resp.json()["error"]
    assert error == {"cause": "internal_fault", "message": "iteration budget exhausted"}


def test_builder_session_loop(client):
    created = client.post(
        "/v1/builder",
        json={"n_states": 8, "budget": 1.0, "mu": 0.07, "sigma": 0.2, "r": 0.03},
    )
    assert created.status_code == 201
    doc = created.json()
    sid = doc["id"]
    assert doc["status"] == "editing" and doc["cost"] == 0.0
    assert len(doc["state_prices"]) == 8

    fetched = client.get(f"/v1/builder/{sid}").json()
    assert fetched["markers"] == doc["markers"]

    level = 1.03  # flat bond payoff: costs exactly the budget
    updated = client.put(f"/v1/builder/{sid}/markers", json={"markers": [level] * 8})
    assert updated.status_code == 200
    body = updated.json()
    assert body["status"] == "submittable"
    np.testing.assert_allclose(body["cost_fraction"], 1.0, rtol=1e-10)

    submitted = client.post(f"/v1/builder/{sid}/submit")
    assert submitted.status_code == 200
    points = submitted.json()["marginal_points"]
    assert len(points["points"]) == 8
    assert points["degenerate"] is True  # flat placement ties every marker
    assert submitted.json()["session"]["status"] == "submitted"

    frozen = client.put(f"/v1/builder/{sid}/markers", json={"markers": [level] * 8})
    assert frozen.status_code == 409
    assert frozen.json()["error"]["cause"] == "illegal_transition"

    realized = client.post(f"/v1/builder/{sid}/realize", json={"seed": 7})
    assert realized.status_code == 200
    outcome = realized.json()
    assert 1 <= outcome["state"] <= 8
    assert outcome["wealth"] == level
    assert outcome["session"]["status"] == "realized"

    again = client.post(f"/v1/builder/{sid}/realize", json={"seed": 8})
    assert again.status_code == 409


def test_builder_submit_out_of_band_is_409(client):
    created = client.post(
        "/v1/builder",
        json={"n_states": 8, "budget": 1.0, "mu": 0.07, "sigma": 0.2, "r": 0.03},
    ).json()
    client.put(f"/v1/builder/{created['id']}/markers", json={"markers": [0.5] * 8})
    resp = client.post(f"/v1/builder/{created['id']}/submit")
    assert resp.status_code == 409
    assert resp.json()["error"]["status"] == "editing"


def test_builder_unknown_session_is_404(client):
    resp = client.get("/v1/builder/deadbeef")
    assert resp.status_code == 404
    assert resp.json()["error"]["cause"] == "unknown_session"


def test_builder_sessions_expire_after_the_ttl():
    app = create_app(ServiceConfig(session_ttl=0.05))
    with TestClient(app) as client:
        sid = client.post(
            "/v1/builder",
            json={"n_states": 8, "budget": 1.0, "mu": 0.07, "sigma": 0.2, "r": 0.03},
        ).json()["id"]
        assert client.get(f"/v1/builder/{sid}").status_code == 200
        time.sleep(0.12)
        assert client.get(f"/v1/builder/{sid}").status_code == 404


def test_config_from_environment(monkeypatch):
    monkeypatch.setenv("TARGETWEALTH_BIND", "0.0.0.0:9100")
    monkeypatch.setenv("TARGETWEALTH_SESSION_TTL", "10")
    monkeypatch.setenv("TARGETWEALTH_QUAD_NODES", "64")
    cfg = ServiceConfig.from_env()
    assert (cfg.host, cfg.port) == ("0.0.0.0", 9100)
    assert cfg.session_ttl == 10.0
    assert cfg.quad.nodes == 64


def test_browser_preflight_is_allowed(client):
    resp = client.options(
        "/v1/builder",
        headers={
            "Origin": "http://localhost:5173",
            "Access-Control-Request-Method": "POST",
        },
    )
    assert resp.status_code == 200
    assert resp.headers["access-control-allow-origin"] == "*"
