"""HTTP service flows via the in-process test client."""

import pytest
from fastapi.testclient import TestClient

from polaris.service.app import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def loaded_client(client):
    gen = client.post("/generate", json={"seed": 1, "scale": 0.1}).json()
    ingested = client.post("/ingest", json={"lines": gen["lines"]}).json()
    assert ingested["report"]["executions_rejected"] == 0
    boot = client.post(
        "/profiles",
        json={"executions": ingested["executions"], "window": 4096, "min_n": 5},
    )
    assert boot.status_code == 200
    return client


def test_health_before_and_after_bootstrap(client):
    doc = client.get("/health").json()
    assert doc["status"] == "ok"
    assert doc["profiles_loaded"] is False


def test_endpoints_require_profiles(client):
    response = client.post(
        "/decision", json={"scenario": "unconstrained"}
    )
    assert response.status_code == 409
    assert response.json()["error"] == "NO_PROFILES_LOADED"


def test_ingest_reports_rejects(client):
    lines = [
        '{"ts_ms": 0.0, "layer": "RRC", "event": "RRC_TRIGGER", "mech": "BWP"}',
        '{"ts_ms": 1.0, "layer": "L2", "event": "CONFIG_START"}',
        "not json at all",
    ]
    doc = client.post("/ingest", json={"lines": lines}).json()
    assert doc["report"]["executions_rejected"] == 1
    assert doc["report"]["rejects"][0]["reason"] == "MISSING_COMPLETION"
    assert doc["report"]["line_skips"][0]["code"] == "MALFORMED_LINE"


def test_bootstrap_requires_exactly_one_source(client):
    response = client.post("/profiles", json={})
    assert response.status_code == 400


def test_decision_flow(loaded_client):
    response = loaded_client.post(
        "/decision",
        json={"scenario": "unconstrained", "tail_weight": 0.5, "variability_weight": 0.5},
    )
    doc = response.json()
    assert response.status_code == 200
    assert doc["selected"] == "BWP"
    assert doc["rule"] == "disruption_score"
    assert len(doc["candidates"]) >= 5
    for candidate in doc["candidates"]:
        assert 0.0 <= candidate["norm_mean"] <= 1.0


def test_decision_with_inline_scenario_and_baseline(loaded_client):
    doc = loaded_client.post(
        "/decision",
        json={
            "scenario": {"name": "custom", "allowed": ["HO_LTE", "HO_NR"]},
            "policy": "always_ho",
        },
    ).json()
    assert doc["rule"] == "always_ho"
    assert doc["selected"] in ("HO_LTE", "HO_NR")


def test_decision_conflict_codes(loaded_client):
    response = loaded_client.post(
        "/decision",
        json={"scenario": {"name": "x", "allowed": ["HO_LTE"]}, "policy": "always_bwp"},
    )
    assert response.status_code == 409
    assert response.json()["error"] == "FIXED_MECHANISM_UNAVAILABLE"

    # rare mechanisms in a small corpus sit below the eligibility floor
    response = loaded_client.post(
        "/decision", json={"scenario": {"name": "y", "allowed": ["RR_LTE"]}}
    )
    assert response.status_code == 409
    assert response.json()["error"] == "NO_FEASIBLE_MECHANISM"


def test_unknown_scenario_is_client_error(loaded_client):
    response = loaded_client.post("/decision", json={"scenario": "nope"})
    assert response.status_code == 400


def test_profiles_summary_and_export(loaded_client):
    summary = loaded_client.get("/profiles/summary").json()
    mechanisms = {row["mechanism"] for row in summary["rows"]}
    assert "BWP" in mechanisms
    store = loaded_client.get("/profiles").json()
    assert store["profiles"]["BWP"]["n"] == len(store["profiles"]["BWP"]["samples_phy"])


def test_refresh_grows_buffers(loaded_client):
    before = loaded_client.get("/profiles").json()["profiles"]["BWP"]["n"]
    gen = loaded_client.post("/generate", json={"seed": 2, "scale": 0.02}).json()
    ingested = loaded_client.post("/ingest", json={"lines": gen["lines"]}).json()
    refreshed = loaded_client.post(
        "/profiles/refresh", json={"executions": ingested["executions"]}
    )
    assert refreshed.status_code == 200
    after = loaded_client.get("/profiles").json()["profiles"]["BWP"]["n"]
    assert after > before


def test_simulate_and_exceedance(loaded_client):
    events = [
        {"time_ms": float(i), "carrier_id": "c0", "scenario": "unconstrained"}
        for i in range(30)
    ]
    doc = loaded_client.post(
        "/simulate",
        json={"events": events, "policy": {"kind": "polaris"}, "seed": 5},
    ).json()
    assert doc["failures"] == 0
    assert len(doc["latencies_phy"]) == 30
    assert doc["summary"]["exceedance_50ms"] == 0.0

    curve = loaded_client.post(
        "/exceedance",
        json={"mechanism": "BWP", "view": "rrc_phy", "thresholds": [1000.0]},
    ).json()["curve"]
    assert curve[0][1] > 0.5


def test_exceedance_unknown_mechanism(loaded_client):
    response = loaded_client.post("/exceedance", json={"mechanism": "XXX"})
    assert response.status_code == 400
    assert response.json()["error"] == "INVALID_INPUT"
    response = loaded_client.post(
        "/exceedance", json={"mechanism": "RR_LTE", "thresholds": [3.0, 2.0]}
    )
    assert response.status_code == 400


def test_evaluate_endpoint_marks_failed_cells(loaded_client):
    doc = loaded_client.post(
        "/evaluate",
        json={
            "scenarios": ["no-bwp"],
            "tail_weights": [0.5],
            "variability_weights": [0.5],
            "baselines": ["always_bwp", "always_ho"],
            "seeds": [3],
            "events_per_cell": 50,
        },
    ).json()
    by_policy = {c["policy"]: c for c in doc["cells"]}
    assert by_policy["always_bwp"]["status"] == "FAILED"
    assert by_policy["always_ho"]["status"] == "OK"
    polaris_cell = by_policy["polaris(tail=0.5,var=0.5)"]
    assert polaris_cell["reductions"]["always_bwp"] == "FAILED"
    assert "mean_reduction" in polaris_cell["reductions"]["always_ho"]


def test_report_endpoint(loaded_client):
    gen = loaded_client.post("/generate", json={"seed": 1, "scale": 0.1}).json()
    ingested = loaded_client.post("/ingest", json={"lines": gen["lines"]}).json()
    doc = loaded_client.post(
        "/report", json={"executions": ingested["executions"]}
    ).json()
    assert {row["mechanism"] for row in doc["medians"]} >= {"BWP", "CA"}
    assert doc["stage_shares"]
    bwp_curve = [r for r in doc["exceedance_rrc_phy"] if r["mechanism"] == "BWP"]
    at_1s = [r for r in bwp_curve if r["threshold_ms"] == 1000.0][0]
    assert at_1s["probability"] > 0.5


def test_generate_strict_conflict(client):
    response = client.post("/generate", json={"seed": 1, "scale": 0.05, "strict": True})
    assert response.status_code == 409
    assert response.json()["error"] == "INFEASIBLE_TARGET"
