"""HTTP + WebSocket session service.

Endpoints (all JSON):

- ``POST /v1/sessions``: body ``{activity, scenario | scenario_name, seed?,
  options?}`` creates a session and returns ``{id, seed}``.
- ``GET /v1/sessions/{id}/view?role=R``: redacted role view.
- ``POST /v1/sessions/{id}/actions``: body ``{role, expected_index, action}``
  applies one action under optimistic concurrency.
- ``GET /v1/sessions/{id}/log``: the full event log (instructor/replay surface).
- ``GET /v1/sessions/{id}/solution``: solver output for rbj sessions (the
  Q-value overlay the UI can toggle).
- ``GET /v1/sessions/{id}/debug/exact-belief``: brute-force posterior for
  twospies sessions; only present when the app is created with
  ``debug_oracle=True``.
- ``WS /v1/sessions/{id}/events?role=R&cursor=N``: ordered stream of redacted
  events ``{index, type, payload}`` from the cursor onward.

Errors are ``{code, message, detail}`` with statuses: 400 validation/illegal
input, 404 unknown session, 409 stale index or finished game.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import hmm, mdp, rbj
from .errors import (
    AiLabError,
    CorruptLog,
    GameOver,
    IllegalAction,
    IllegalMove,
    ScenarioSyntaxError,
    StaleSession,
    UnknownRole,
    UnknownSession,
    UnsupportedActivity,
    ValidationError,
)
from .scenario import KIND_FOR_ACTIVITY, parse_scenario, resolve_scenario
from .sessions import Session, SessionStore, redact_event, replay

_STATUS_FOR = [
    ((UnknownSession,), 404),
    ((StaleSession, GameOver), 409),
    (
        (
            ValidationError,
            ScenarioSyntaxError,
            UnsupportedActivity,
            UnknownRole,
            IllegalAction,
            IllegalMove,
            CorruptLog,
        ),
        400,
    ),
]


def _status_for(exc: AiLabError) -> int:
    for types, status in _STATUS_FOR:
        if isinstance(exc, types):
            return status
    return 400


class CreateSessionBody(BaseModel):
    activity: str
    scenario: dict | None = None
    scenario_name: str | None = None
    seed: int | None = None
    options: dict = {}


class ActionBody(BaseModel):
    role: str
    expected_index: int
    action: dict


def create_app(
    scenario_dir: str | Path | None = None,
    session_dir: str | Path | None = None,
    debug_oracle: bool = False,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="ai-lab session service")
    store = SessionStore(session_dir)
    app.state.store = store

    @app.exception_handler(AiLabError)
    async def handle_domain_error(_request, exc: AiLabError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )

    @app.post("/v1/sessions")
    async def create_session(body: CreateSessionBody) -> dict:
        if body.activity not in KIND_FOR_ACTIVITY:
            raise UnsupportedActivity(f"unknown activity {body.activity!r}")
        if body.scenario is not None:
            envelope = body.scenario
            doc = parse_scenario(json.dumps(envelope))
        elif body.scenario_name:
            doc = resolve_scenario(body.scenario_name, scenario_dir=scenario_dir)
            envelope = None
        else:
            raise ValidationError("provide scenario inline or scenario_name")
        session = store.create(
            body.activity, doc, seed=body.seed, options=body.options, envelope=envelope
        )
        return {"id": session.record.session_id, "seed": session.record.seed}

    @app.get("/v1/sessions/{session_id}/view")
    async def get_view(session_id: str, role: str = Query(...)) -> dict:
        return store.view(session_id, role)

    @app.post("/v1/sessions/{session_id}/actions")
    async def post_action(session_id: str, body: ActionBody) -> dict:
        session = store.get(session_id)
        async with session.lock:
            events = store.apply_action(
                session_id, body.role, body.action, body.expected_index
            )
        async with session.new_events:
            session.new_events.notify_all()
        redacted = [
            e2
            for e2 in (
                redact_event(session.record.activity, body.role, e) for e in events
            )
            if e2 is not None
        ]
        return {
            "accepted": True,
            "last_index": session.last_index,
            "status": session.record.status,
            "events": redacted,
        }

    @app.get("/v1/sessions/{session_id}/log")
    async def get_log(session_id: str) -> dict:
        session = store.get(session_id)
        return {
            "header": session.record.header(),
            "status": session.record.status,
            "events": [e.to_dict() for e in session.record.events],
        }

    @app.get("/v1/sessions/{session_id}/solution")
    async def get_solution(session_id: str) -> dict:
        session = store.get(session_id)
        if session.record.activity != "rbj":
            raise IllegalAction("solution overlay exists for rbj sessions only")
        deck = session.engine.deck
        compiled = rbj.build_rbj_mdp(deck)
        vi = mdp.value_iteration(compiled)
        return mdp.vi_result_to_jsonable(compiled, vi)

    if debug_oracle:

        @app.get("/v1/sessions/{session_id}/debug/exact-belief")
        async def get_exact_belief(session_id: str) -> dict:
            session = store.get(session_id)
            if session.record.activity != "twospies":
                raise IllegalAction("exact-belief debug exists for twospies sessions only")
            engine = session.engine
            observations, failed = hmm.evidence_from_history(engine.game.history)
            posteriors = hmm.brute_force_posterior(engine.model, observations, failed)
            return {
                "rounds": len(posteriors),
                "posteriors": [b.as_dict(engine.model) for b in posteriors],
            }

    @app.websocket("/v1/sessions/{session_id}/events")
    async def stream_events(websocket: WebSocket, session_id: str):
        await websocket.accept()
        try:
            session: Session = store.get(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        role = websocket.query_params.get("role", "observer")
        try:
            store._check_role(session.record.activity, role)
        except UnknownRole:
            await websocket.close(code=4400)
            return
        cursor = int(websocket.query_params.get("cursor", 0))
        try:
            while True:
                async with session.new_events:
                    while cursor >= len(session.record.events):
                        await session.new_events.wait()
                    events = session.record.events[cursor:]
                    cursor = len(session.record.events)
                for event in events:
                    redacted = redact_event(session.record.activity, role, event)
                    if redacted is not None:
                        await websocket.send_json(redacted)
        except WebSocketDisconnect:
            return

    @app.get("/v1/health")
    async def health() -> dict:
        return {"ok": True, "sessions": len(store.ids())}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def run_server(
    host: str = "127.0.0.1",
    port: int = 8000,
    scenario_dir: str | Path | None = None,
    session_dir: str | Path | None = None,
    debug_oracle: bool = False,
    static_dir: str | Path | None = None,
) -> None:
    import uvicorn

    app = create_app(
        scenario_dir=scenario_dir,
        session_dir=session_dir,
        debug_oracle=debug_oracle,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def replay_session_file(path: str | Path) -> str:
    """Replay a persisted session log and return its canonical final state."""
    from .sessions import load_record

    return replay(load_record(path))
