"""Agent-facing HTTP/JSON simulation service.

Sessions wrap a ScenarioSim; the agent owns the clock (one blip per step
call). Every mutating command carries a strictly-increasing sequence
number and a sha256 digest over its canonical body; duplicates replay the
stored response idempotently. Responses carry a body digest plus a
session-independent state digest so transport transparency can be checked
against in-process simulation.
"""

import hashlib
import json
import statistics
import threading
import time
import uuid

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .airspace import (CLEARANCE_KINDS, Clearance, Scenario, ScenarioInvariantError,
                       load_scenario, scenario_from_document)
from .config import engine_config, load_config
from .engine import MissingRadarError, ModelSet, ScenarioSim
from .metrics.safety import loss_of_separation
from .perf import load_model, model_from_document

DIGEST_ALGORITHM = "sha256"
DIGEST_HEADER = "X-Digest-Algorithm"


def canonical_bytes(body: dict) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def compute_digest(body: dict) -> str:
    """sha256 over the canonical (sorted-key, no-whitespace) body, with any
    'digest' field removed first."""
    trimmed = {k: v for k, v in body.items() if k != "digest"}
    return hashlib.sha256(canonical_bytes(trimmed)).hexdigest()


def signed(body: dict) -> dict:
    out = dict(body)
    out["digest"] = compute_digest(body)
    return out


def state_document(sim: ScenarioSim) -> dict:
    """Session-independent snapshot used for the rolling state digest."""
    return {"clock": sim.clock, "aircraft": sim.snapshot()}


class Session:
    def __init__(self, session_id: str, sim: ScenarioSim):
        self.id = session_id
        self.sim = sim
        self.lock = threading.Lock()
        self.last_sequence = -1
        self.responses: dict[int, tuple[int, dict, str]] = {}  # seq -> (code, body, req digest)
        self.step_log: list[dict] = []
        self.checksum_chain = hashlib.sha256(b"airtwin-session").hexdigest()

    def chain(self, digest: str) -> str:
        self.checksum_chain = hashlib.sha256(
            (self.checksum_chain + digest).encode("ascii")
        ).hexdigest()
        return self.checksum_chain


def create_app(config: dict | None = None) -> FastAPI:
    cfg = config or load_config()
    svc = cfg.get("service", {})
    token = svc.get("token", "")
    eng_cfg = engine_config(cfg)

    app = FastAPI(title="airtwin simulation service", version="1")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    def err(code: int, kind: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=code,
                            content=signed({"error": kind, "message": message}),
                            headers={DIGEST_HEADER: DIGEST_ALGORITHM})

    def ok(body: dict, code: int = 200) -> JSONResponse:
        return JSONResponse(status_code=code, content=signed(body),
                            headers={DIGEST_HEADER: DIGEST_ALGORITHM})

    def authorised(request: Request) -> bool:
        if not token:
            return True
        return request.headers.get("Authorization", "") == f"Bearer {token}"

    def get_session(session_id: str) -> Session | None:
        return sessions.get(session_id)

    def sequence_gate(session: Session, body: dict):
        """Returns a stored response for duplicates, an error response for
        stale/conflicting sequence numbers, or None to proceed."""
        if "sequence" not in body:
            return err(400, "schema", "missing sequence number")
        seq = body["sequence"]
        if not isinstance(seq, int) or seq < 0:
            return err(400, "schema", "sequence must be a non-negative integer")
        digest = body.get("digest", "")
        if seq in session.responses:
            code, stored_body, stored_digest = session.responses[seq]
            if stored_digest == digest:
                return JSONResponse(status_code=code, content=stored_body,
                                    headers={DIGEST_HEADER: DIGEST_ALGORITHM,
                                             "X-Replayed": "true"})
            return err(409, "sequence", f"sequence {seq} reused with a different body")
        if seq <= session.last_sequence:
            return err(409, "sequence", f"stale sequence {seq} <= {session.last_sequence}")
        return None

    def remember(session: Session, seq: int, code: int, body: dict, req_digest: str) -> None:
        session.last_sequence = max(session.last_sequence, seq)
        session.responses[seq] = (code, body, req_digest)

    @app.post("/v1/sessions")
    async def create_session(request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        body = await request.json()
        if body.get("digest") and compute_digest(body) != body["digest"]:
            return err(400, "digest", "digest mismatch on create")
        try:
            if "scenario" in body:
                scenario = scenario_from_document(body["scenario"], source="<inline>")
            elif "scenario_path" in body:
                scenario = load_scenario(body["scenario_path"])
            else:
                return err(400, "schema", "need scenario or scenario_path")
            mode = body.get("mode", "replay")
            models = ModelSet()
            for doc in body.get("models", []):
                models.add(model_from_document(doc) if isinstance(doc, dict)
                           else load_model(doc))
            sim = ScenarioSim(scenario, mode, models if len(models.types()) else None,
                              seed=int(body.get("seed", 0)), config=eng_cfg)
        except (ValueError, KeyError, MissingRadarError) as exc:
            return err(400, "scenario", str(exc))
        session = Session(uuid.uuid4().hex, sim)
        sessions[session.id] = session
        state = state_document(sim)
        # chain starts at the first step; the created state is reported only
        return ok({"session": session.id, "mode": mode, "clock": sim.clock,
                   "state_digest": compute_digest(state)}, code=201)

    @app.post("/v1/sessions/{session_id}/step")
    async def step_session(session_id: str, request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        session = get_session(session_id)
        if session is None:
            return err(404, "session", f"unknown session {session_id}")
        body = await request.json()
        if compute_digest(body) != body.get("digest", ""):
            return err(400, "digest", "digest mismatch: message integrity check failed")
        with session.lock:
            gate = sequence_gate(session, body)
            if gate is not None:
                return gate
            try:
                clock = session.sim.step()
            except MissingRadarError as exc:
                resp = signed({"error": "radar", "message": str(exc)})
                remember(session, body["sequence"], 422, resp, body.get("digest", ""))
                return JSONResponse(status_code=422, content=resp,
                                    headers={DIGEST_HEADER: DIGEST_ALGORITHM})
            state = state_document(session.sim)
            state_digest = compute_digest(state)
            chain = session.chain(state_digest)
            session.step_log.append({"clock": clock, "state_digest": state_digest})
            resp = signed({"session": session.id, "clock": clock, "aircraft": state["aircraft"],
                           "state_digest": state_digest, "checksum_chain": chain})
            remember(session, body["sequence"], 200, resp, body.get("digest", ""))
            return JSONResponse(status_code=200, content=resp,
                                headers={DIGEST_HEADER: DIGEST_ALGORITHM})

    @app.post("/v1/sessions/{session_id}/clearances")
    async def issue_clearance(session_id: str, request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        session = get_session(session_id)
        if session is None:
            return err(404, "session", f"unknown session {session_id}")
        body = await request.json()
        if compute_digest(body) != body.get("digest", ""):
            return err(400, "digest", "digest mismatch: message integrity check failed")
        with session.lock:
            gate = sequence_gate(session, body)
            if gate is not None:
                return gate
            for field in ("callsign", "clearance"):
                if field not in body:
                    return err(400, "schema", f"missing field {field!r}")
            cl_doc = body["clearance"]
            kind = cl_doc.get("kind")
            applied_time = session.sim.clock + session.sim.scenario.blip_seconds
            if kind not in CLEARANCE_KINDS:
                resp = signed({"error": "unsupported_clearance",
                               "message": f"clearance kind {kind!r} is not supported "
                                          f"(supported: {', '.join(CLEARANCE_KINDS)})"})
                remember(session, body["sequence"], 422, resp, body.get("digest", ""))
                return JSONResponse(status_code=422, content=resp,
                                    headers={DIGEST_HEADER: DIGEST_ALGORITHM})
            try:
                clearance = Clearance(
                    id=cl_doc.get("id", f"agent-{body['sequence']}"),
                    callsign=body["callsign"],
                    issue_time=applied_time,
                    kind=kind,
                    value=cl_doc["value"],
                    condition=cl_doc.get("condition", "now"),
                    qualifier=cl_doc.get("qualifier", "equals"),
                )
            except (ScenarioInvariantError, KeyError) as exc:
                return err(400, "schema", f"bad clearance: {exc}")
            if body["callsign"] not in session.sim.scenario.flights:
                return err(404, "callsign", f"unknown callsign {body['callsign']!r}")
            try:
                session.sim.issue(clearance)
            except MissingRadarError as exc:
                return err(404, "callsign", str(exc))
            resp = signed({"session": session.id, "queued": True,
                           "applied_time": applied_time,
                           "clearance_id": clearance.id})
            remember(session, body["sequence"], 200, resp, body.get("digest", ""))
            return JSONResponse(status_code=200, content=resp,
                                headers={DIGEST_HEADER: DIGEST_ALGORITHM})

    @app.get("/v1/sessions/{session_id}/state")
    async def get_state(session_id: str, request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        session = get_session(session_id)
        if session is None:
            return err(404, "session", f"unknown session {session_id}")
        with session.lock:
            state = state_document(session.sim)
            return ok({"session": session.id, "clock": state["clock"],
                       "aircraft": state["aircraft"],
                       "state_digest": compute_digest(state)})

    @app.get("/v1/sessions/{session_id}/metrics")
    async def get_metrics(session_id: str, request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        session = get_session(session_id)
        if session is None:
            return err(404, "session", f"unknown session {session_id}")
        with session.lock:
            snap = session.sim.snapshot()
            pairs = loss_of_separation([
                (a["callsign"], a["lat"], a["lon"], a["fl"]) for a in snap
            ]) if len(snap) >= 2 else []
            return ok({
                "session": session.id, "clock": session.sim.clock,
                "aircraft_count": len(snap),
                "loss_of_separation_pairs": [list(p) for p in pairs],
                "warnings": list(getattr(session.sim, "warnings", [])),
                "steps_taken": len(session.step_log),
                "step_log_complete": _log_complete(session),
            })

    @app.delete("/v1/sessions/{session_id}")
    async def close_session(session_id: str, request: Request):
        if not authorised(request):
            return err(401, "auth", "missing or invalid token")
        session = sessions.pop(session_id, None)
        if session is None:
            return err(404, "session", f"unknown session {session_id}")
        return ok({"session": session_id, "closed": True,
                   "steps_taken": len(session.step_log)})

    return app


def _log_complete(session: Session) -> bool:
    """Step log must be monotone in sim clock with no omissions."""
    clocks = [e["clock"] for e in session.step_log]
    if not clocks:
        return True
    diffs = {b - a for a, b in zip(clocks, clocks[1:])}
    return all(d == session.sim.scenario.blip_seconds for d in diffs)


def latency_probe(client, session_id: str, n: int = 100) -> dict:
    """Round-trip latency over n no-op state queries.

    `client` is any httpx-compatible client (TestClient included).
    Flags p99 above one radar update cycle (6 s).
    """
    if n < 1:
        raise ValueError("empty probe: n must be >= 1")
    times = []
    for _ in range(n):
        t0 = time.perf_counter()
        resp = client.get(f"/v1/sessions/{session_id}/state")
        dt = time.perf_counter() - t0
        if resp.status_code != 200:
            raise RuntimeError(f"probe transport failure: {resp.status_code}")
        times.append(dt)
    times.sort()
    p50 = statistics.median(times)
    p99 = times[min(len(times) - 1, int(0.99 * len(times)))]
    return {"n": n, "p50_s": p50, "p99_s": p99, "over_6s": p99 > 6.0}
