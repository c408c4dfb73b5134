from __future__ import annotations

import json

import pytest

from ailab.errors import (
    CorruptLog,
    GameOver,
    IllegalAction,
    StaleSession,
    UnknownRole,
    UnknownSession,
    UnsupportedActivity,
)
from ailab.scenario import load_bundled
from ailab.sessions import (
    ACTIVITIES,
    HIDDEN_FIELDS,
    ROLES,
    SessionStore,
    build_engine,
    live_final_state,
    load_record,
    redact_event,
    replay,
    scan_for_hidden_keys,
)


def fresh_store():
    return SessionStore()


def drive_to_completion(store, session):
    """Play each activity to a terminal state with scripted actions."""
    sid = session.record.session_id
    activity = session.record.activity
    if activity == "search":
        store.apply_action(sid, "algorithm", {"type": "run"}, session.last_index)
    elif activity == "rbj":
        while session.record.status == "running":
            store.apply_action(sid, "player", {"type": "hit"}, session.last_index)
    elif activity == "qmaze":
        for _ in range(3):
            while not session.engine.episode_done:
                store.apply_action(sid, "player", {"type": "step"}, session.last_index)
            store.apply_action(sid, "player", {"type": "reset"}, session.last_index)
    elif activity == "twospies":
        while session.record.status == "running":
            store.apply_action(sid, "hunter", {"type": "stay"}, session.last_index)
    return session


def create_all(store, seed=12):
    return {
        "search": store.create("search", load_bundled("house.search"), seed=seed, options={"algo": "ucs"}),
        "rbj": store.create("rbj", load_bundled("red_black_default.deck"), seed=seed),
        "qmaze": store.create("qmaze", load_bundled("grid3x3"), seed=seed),
        "twospies": store.create("twospies", load_bundled("country_a.map"), seed=seed),
    }


# -- creation ------------------------------------------------------------------

def test_twospies_session_starts_uniform():
    store = fresh_store()
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    view = store.view(session.record.session_id, "hunter")
    belief = view["payload"]["belief"]
    assert view["payload"]["round"] == 0
    assert all(abs(p - 1 / 8) <= 1e-12 for p in belief.values())


def test_rbj_session_starts_at_zero_zero():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    assert store.view(session.record.session_id, "player")["payload"]["state"] == [0, 0]


def test_kind_mismatch_is_unsupported_activity():
    store = fresh_store()
    with pytest.raises(UnsupportedActivity):
        store.create("qmaze", load_bundled("house.search"))
    with pytest.raises(UnsupportedActivity):
        build_engine("nonsense", load_bundled("grid3x3"), 1, {})


def test_generated_seed_is_returned_and_json_safe():
    store = fresh_store()
    session = store.create("qmaze", load_bundled("grid3x3"))
    assert 0 <= session.record.seed < 2**53


# -- views and redaction ----------------------------------------------------------

def test_unknown_session_and_role():
    store = fresh_store()
    with pytest.raises(UnknownSession):
        store.view("nope", "observer")
    session = store.create("qmaze", load_bundled("grid3x3"), seed=1)
    with pytest.raises(UnknownRole):
        store.view(session.record.session_id, "hunter")


def test_views_are_stable_without_actions():
    store = fresh_store()
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    first = json.dumps(store.view(session.record.session_id, "hunter"), sort_keys=True)
    second = json.dumps(store.view(session.record.session_id, "hunter"), sort_keys=True)
    assert first == second


def test_every_non_observer_view_passes_the_structural_scan():
    store = fresh_store()
    sessions = create_all(store)
    for activity, session in sessions.items():
        drive_to_completion(store, session)
        for role in ROLES[activity]:
            if role == "observer":
                continue
            payload = store.view(session.record.session_id, role)["payload"]
            forbidden = HIDDEN_FIELDS.get((activity, role), set())
            assert scan_for_hidden_keys(payload, forbidden) == [], (activity, role)


def test_observer_sees_hidden_fields():
    store = fresh_store()
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    store.apply_action(session.record.session_id, "hunter", {"type": "stay"}, 1)
    view = store.view(session.record.session_id, "observer")["payload"]
    assert "spy_city" in view
    assert "belief" in view


def test_frontier_view_contains_only_frontier():
    store = fresh_store()
    session = store.create("search", load_bundled("house.search"), seed=1, options={"algo": "bfs"})
    store.apply_action(session.record.session_id, "algorithm", {"type": "step"}, session.last_index)
    payload = store.view(session.record.session_id, "frontier")["payload"]
    assert "frontier" in payload
    assert "goal" not in payload and "edges" not in payload


def test_hunter_event_stream_drops_spy_moves():
    store = fresh_store()
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    events = store.apply_action(session.record.session_id, "hunter", {"type": "stay"}, 1)
    hunter_stream = [
        redact_event("twospies", "hunter", e) for e in events
    ]
    hunter_types = [e["type"] for e in hunter_stream if e is not None]
    assert "spy_moved" not in hunter_types
    assert "round_resolved" in hunter_types
    observer_types = [
        redact_event("twospies", "observer", e)["type"] for e in events
    ]
    assert "spy_moved" in observer_types


# -- optimistic concurrency ---------------------------------------------------------

def test_stale_index_rejected():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    idx = session.last_index
    store.apply_action(session.record.session_id, "player", {"type": "hit"}, idx)
    with pytest.raises(StaleSession):
        store.apply_action(session.record.session_id, "player", {"type": "hit"}, idx)


def test_exactly_one_of_two_racing_submissions_succeeds():
    store = fresh_store()
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    idx = session.last_index
    outcomes = []
    for _ in range(2):
        try:
            store.apply_action(session.record.session_id, "hunter", {"type": "stay"}, idx)
            outcomes.append("ok")
        except StaleSession:
            outcomes.append("stale")
    assert sorted(outcomes) == ["ok", "stale"]


def test_action_after_finish_raises():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    drive_to_completion(store, session)
    with pytest.raises(GameOver):
        store.apply_action(session.record.session_id, "player", {"type": "hit"}, session.last_index)


def test_illegal_action_reported():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    with pytest.raises(IllegalAction):
        store.apply_action(session.record.session_id, "player", {"type": "fold"}, session.last_index)
    with pytest.raises(IllegalAction):
        store.apply_action(session.record.session_id, "dealer", {"type": "hit"}, session.last_index)


# -- isolation ------------------------------------------------------------------------

def test_sessions_are_isolated():
    store = fresh_store()
    a = store.create("twospies", load_bundled("country_a.map"), seed=5)
    b = store.create("twospies", load_bundled("country_a.map"), seed=5)
    before = json.dumps(store.view(b.record.session_id, "observer")["payload"], sort_keys=True)
    store.apply_action(a.record.session_id, "hunter", {"type": "stay"}, a.last_index)
    store.apply_action(a.record.session_id, "hunter", {"type": "capture"}, a.last_index)
    after = json.dumps(store.view(b.record.session_id, "observer")["payload"], sort_keys=True)
    assert before == after


def test_identical_seeds_replay_identically_across_sessions():
    store = fresh_store()
    a = store.create("rbj", load_bundled("red_black_default.deck"), seed=42)
    b = store.create("rbj", load_bundled("red_black_default.deck"), seed=42)
    drive_to_completion(store, a)
    drive_to_completion(store, b)
    va = store.view(a.record.session_id, "observer")["payload"]
    vb = store.view(b.record.session_id, "observer")["payload"]
    assert json.dumps(va, sort_keys=True) == json.dumps(vb, sort_keys=True)


# -- replay ------------------------------------------------------------------------

def test_replay_reproduces_live_state_for_all_activities():
    store = fresh_store()
    for activity, session in create_all(store).items():
        drive_to_completion(store, session)
        assert replay(session.record) == live_final_state(session), activity


def test_replay_empty_log_gives_initial_state():
    store = fresh_store()
    session = store.create("search", load_bundled("house.search"), seed=1)
    assert replay(session.record) == live_final_state(session)


def test_replay_detects_index_gap():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    store.apply_action(session.record.session_id, "player", {"type": "hit"}, session.last_index)
    session.record.events[-1].index += 5
    with pytest.raises(CorruptLog):
        replay(session.record)


def test_replay_detects_tampered_payload():
    store = fresh_store()
    session = store.create("rbj", load_bundled("red_black_default.deck"), seed=5)
    store.apply_action(session.record.session_id, "player", {"type": "hit"}, session.last_index)
    for event in session.record.events:
        if event.type == "card_drawn":
            event.payload["card"] = "black" if event.payload["card"] != "black" else "red"
    with pytest.raises(CorruptLog):
        replay(session.record)


def test_persistence_round_trip(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create("twospies", load_bundled("country_a.map"), seed=5)
    while session.record.status == "running":
        store.apply_action(session.record.session_id, "hunter", {"type": "stay"}, session.last_index)
    path = tmp_path / f"{session.record.session_id}.jsonl"
    assert path.exists()
    loaded = load_record(path)
    assert replay(loaded) == live_final_state(session)


def test_loaded_record_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"not_a_header": 1}\n', encoding="utf-8")
    with pytest.raises(CorruptLog):
        load_record(bad)


def test_all_activities_have_roles():
    for activity in ACTIVITIES:
        assert "observer" in ROLES[activity]
