import hashlib
import json

import pytest
from fastapi.testclient import TestClient

from airtwin import engine as eng
from airtwin.airspace import scenario_to_document
from airtwin.config import load_config
from airtwin.perf import model_to_document
from airtwin.service import (compute_digest, create_app, latency_probe, signed,
                             state_document)
from helpers import single_flight_scenario, zero_cov_models


@pytest.fixture()
def client(golden_doc):
    return TestClient(create_app())


def create_session(client, doc, mode="replay", models=(), seed=0):
    body = {"scenario": doc, "mode": mode, "seed": seed}
    if models:
        body["models"] = [model_to_document(m) for m in models]
    resp = client.post("/v1/sessions", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()["session"]


def test_digest_helpers_are_canonical():
    body = {"b": 1, "a": {"y": 2, "x": 3}}
    d1 = compute_digest(body)
    d2 = compute_digest({"a": {"x": 3, "y": 2}, "b": 1, "digest": "ignored"})
    assert d1 == d2
    assert signed(body)["digest"] == d1


def test_create_step_and_clock_arithmetic(client, golden_doc):
    sid = create_session(client, golden_doc)
    t0 = None
    for seq in range(10):
        resp = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
        assert resp.status_code == 200, resp.text
        if t0 is None:
            t0 = resp.json()["clock"] - 6
    state = client.get(f"/v1/sessions/{sid}/state")
    assert state.status_code == 200
    assert state.json()["clock"] == t0 + 60
    assert state.headers["X-Digest-Algorithm"] == "sha256"
    assert compute_digest(state.json()) == state.json()["digest"]


def test_duplicate_command_is_idempotent(client, golden_doc):
    sid = create_session(client, golden_doc)
    body = signed({"sequence": 0})
    first = client.post(f"/v1/sessions/{sid}/step", json=body)
    replay = client.post(f"/v1/sessions/{sid}/step", json=body)
    assert replay.status_code == first.status_code
    assert replay.json() == first.json()  # byte-equal response replayed
    assert replay.headers.get("X-Replayed") == "true"
    # and the state did not advance twice
    state = client.get(f"/v1/sessions/{sid}/state").json()
    assert state["clock"] == first.json()["clock"]


def test_corrupted_digest_rejected(client, golden_doc):
    sid = create_session(client, golden_doc)
    body = signed({"sequence": 0})
    body["digest"] = "0" * 64
    resp = client.post(f"/v1/sessions/{sid}/step", json=body)
    assert resp.status_code == 400
    assert "digest mismatch" in resp.json()["message"]


def test_stale_sequence_conflict(client, golden_doc):
    sid = create_session(client, golden_doc)
    assert client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": 5})).status_code == 200
    resp = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": 3}))
    assert resp.status_code == 409
    # same sequence, different body: also a conflict, not a replay
    resp = client.post(f"/v1/sessions/{sid}/step",
                       json=signed({"sequence": 5, "note": "changed"}))
    assert resp.status_code == 409


def test_unknown_session_and_callsign(client, golden_doc):
    assert client.get("/v1/sessions/nope/state").status_code == 404
    sid = create_session(client, golden_doc)
    resp = client.post(f"/v1/sessions/{sid}/clearances", json=signed({
        "sequence": 0, "callsign": "GHOST",
        "clearance": {"kind": "level", "value": 300},
    }))
    assert resp.status_code == 404


def test_unsupported_clearance_kind_422(client, golden_doc):
    sid = create_session(client, golden_doc)
    resp = client.post(f"/v1/sessions/{sid}/clearances", json=signed({
        "sequence": 0, "callsign": "BAW101",
        "clearance": {"kind": "hold", "value": 1},
    }))
    assert resp.status_code == 422
    assert "not supported" in resp.json()["message"]
    assert resp.json()["error"] == "unsupported_clearance"


def test_clearance_applies_on_next_step(client, descent_model, climb_model):
    sc = single_flight_scenario(seed=50, calm=True, with_clearance=False)
    cs = next(iter(sc.flights))
    doc = scenario_to_document(sc)
    sid = create_session(client, doc, "mean_mode", (descent_model, climb_model))
    resp = client.post(f"/v1/sessions/{sid}/clearances", json=signed({
        "sequence": 0, "callsign": cs,
        "clearance": {"kind": "level", "value": 280, "condition": "now"},
    }))
    assert resp.status_code == 200
    applied = resp.json()["applied_time"]
    for seq in range(1, 40):
        step = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
        assert step.status_code == 200
    state = client.get(f"/v1/sessions/{sid}/state").json()
    ac = state["aircraft"][0]
    assert ac["target_fl"] == 280.0
    assert ac["fl"] < 330.0  # it went down
    assert applied % 6 == 0


def test_sessions_are_isolated(client, golden_doc):
    sid_a = create_session(client, golden_doc)
    sid_b = create_session(client, golden_doc)
    a0 = client.get(f"/v1/sessions/{sid_a}/state").json()["state_digest"]
    for seq in range(3):
        client.post(f"/v1/sessions/{sid_b}/step", json=signed({"sequence": seq}))
    a1 = client.get(f"/v1/sessions/{sid_a}/state").json()["state_digest"]
    b1 = client.get(f"/v1/sessions/{sid_b}/state").json()["state_digest"]
    assert a0 == a1
    assert b1 != a1


def test_close_session(client, golden_doc):
    sid = create_session(client, golden_doc)
    assert client.delete(f"/v1/sessions/{sid}").status_code == 200
    assert client.get(f"/v1/sessions/{sid}/state").status_code == 404
    assert client.delete(f"/v1/sessions/{sid}").status_code == 404


def test_metrics_endpoint_reports_live_indicators(client, golden_doc):
    sid = create_session(client, golden_doc)
    for seq in range(5):
        client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
    m = client.get(f"/v1/sessions/{sid}/metrics").json()
    assert m["steps_taken"] == 5
    assert m["step_log_complete"] is True
    assert m["loss_of_separation_pairs"] == []
    assert m["aircraft_count"] >= 1


def test_auth_token_enforced(golden_doc):
    cfg = load_config()
    cfg["service"]["token"] = "sekrit"
    client = TestClient(create_app(cfg))
    resp = client.post("/v1/sessions", json={"scenario": golden_doc})
    assert resp.status_code == 401
    ok = client.post("/v1/sessions", json={"scenario": golden_doc},
                     headers={"Authorization": "Bearer sekrit"})
    assert ok.status_code == 201


def test_transport_transparency_replay(client, golden_scenario, golden_doc):
    """HTTP session and in-process simulation produce identical state digests."""
    sid = create_session(client, golden_doc)
    sim = eng.ScenarioSim(golden_scenario, "replay")
    for seq in range(12):
        resp = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
        sim.step()
        assert resp.json()["state_digest"] == compute_digest(state_document(sim))


def test_transport_transparency_predictive(client, descent_model, climb_model):
    for seed in range(3):
        sc = single_flight_scenario(seed=seed)
        doc = scenario_to_document(sc)
        sid = create_session(client, doc, "probabilistic",
                             (descent_model, climb_model), seed=seed)
        models = eng.ModelSet([descent_model, climb_model])
        sim = eng.ScenarioSim(sc, "probabilistic", models, seed=seed)
        for seq in range(10):
            resp = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
            sim.step()
            assert resp.json()["state_digest"] == compute_digest(state_document(sim)), seed


def test_checksum_chain_over_step_log(client, golden_doc):
    sid = create_session(client, golden_doc)
    digests = []
    chain_reported = None
    for seq in range(6):
        resp = client.post(f"/v1/sessions/{sid}/step", json=signed({"sequence": seq}))
        digests.append(resp.json()["state_digest"])
        chain_reported = resp.json()["checksum_chain"]
    chain = hashlib.sha256(b"airtwin-session").hexdigest()
    for d in digests:
        chain = hashlib.sha256((chain + d).encode()).hexdigest()
    assert chain == chain_reported


def test_latency_probe_local(client, golden_doc):
    sid = create_session(client, golden_doc)
    report = latency_probe(client, sid, n=50)
    assert report["p99_s"] < 6.0
    assert not report["over_6s"]
    assert report["p50_s"] <= report["p99_s"]


def test_latency_probe_empty_rejected(client, golden_doc):
    sid = create_session(client, golden_doc)
    with pytest.raises(ValueError, match="empty probe"):
        latency_probe(client, sid, n=0)


def test_latency_probe_flags_slow_transport(client, golden_doc, monkeypatch):
    sid = create_session(client, golden_doc)
    ticks = iter(range(0, 10_000, 7))  # 7 s between consecutive perf_counter reads

    class FakeTime:
        def perf_counter(self):
            return float(next(ticks))

    import airtwin.service as svc
    monkeypatch.setattr(svc.time, "perf_counter", FakeTime().perf_counter)
    report = latency_probe(client, sid, n=5)
    assert report["over_6s"]
