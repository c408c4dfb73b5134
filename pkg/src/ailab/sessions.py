"""Interactive game sessions: engines, role views, event logs, replay.

A session wraps one activity engine around an append-only event log. Every
stochastic draw comes from the session's seeded stream, so replaying the
logged actions against the same scenario and seed regenerates every derived
event; :func:`replay` verifies that byte-for-byte and rebuilds the final
state.

Role views are built by whitelisting: each role's payload is constructed from
scratch with only the fields its information card grants. ``HIDDEN_FIELDS``
records, per activity and role, the key names that must never appear at any
depth of a serialized view -- the redaction tests scan against it.
"""

from __future__ import annotations

import asyncio
import json
import os
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from . import hmm, qmaze, rbj, search
from .errors import (
    CorruptLog,
    GameOver,
    IllegalAction,
    StaleSession,
    UnknownRole,
    UnknownSession,
    UnsupportedActivity,
)
from .rng import RandomSource
from .scenario import KIND_FOR_ACTIVITY, ScenarioDocument, parse_scenario

ACTIVITIES = ("search", "rbj", "qmaze", "twospies")

ROLES = {
    "search": ("algorithm", "successor_dictionary", "goal_test", "frontier", "observer"),
    "rbj": ("player", "dealer", "observer"),
    "qmaze": ("player", "observer"),
    "twospies": ("hunter", "spy", "observer"),
}

#: Key names that must never appear anywhere in the named role's payloads.
HIDDEN_FIELDS = {
    ("search", "algorithm"): {"goal", "edges", "heuristic", "frontier"},
    ("search", "successor_dictionary"): {"goal", "heuristic", "frontier", "visited", "parents"},
    ("search", "goal_test"): {"edges", "frontier", "visited", "parents"},
    ("search", "frontier"): {"goal", "edges", "heuristic", "visited", "parents"},
    ("rbj", "player"): {"remaining_deck", "hit_deck", "stand_deck"},
    ("qmaze", "player"): {"cells"},
    ("twospies", "hunter"): {"spy_city"},
    ("twospies", "spy"): {"belief"},
}


def scan_for_hidden_keys(payload, forbidden: set[str]) -> list[str]:
    """All forbidden key names appearing at any depth of a JSON-able payload."""
    found = []

    def walk(node):
        if isinstance(node, dict):
            for key, value in node.items():
                if key in forbidden:
                    found.append(key)
                walk(value)
        elif isinstance(node, list):
            for item in node:
                walk(item)

    walk(payload)
    return found


@dataclass
class Event:
    index: int
    ts: float
    actor: str
    type: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "ts": self.ts,
            "actor": self.actor,
            "type": self.type,
            "payload": self.payload,
        }

    @staticmethod
    def from_dict(raw: dict) -> "Event":
        return Event(
            index=raw["index"],
            ts=raw["ts"],
            actor=raw["actor"],
            type=raw["type"],
            payload=raw["payload"],
        )


# -- activity engines --------------------------------------------------------

class SearchEngine:
    activity = "search"

    def __init__(self, doc: ScenarioDocument, seed: int, options: dict):
        algo = options.get("algo", "bfs")
        if algo not in search.ALGO_TO_DISCIPLINE:
            raise IllegalAction(f"unknown algorithm {algo!r}")
        self.graph = doc.spec
        self.algo = algo
        self.run = search.SearchRun(self.graph, search.ALGO_TO_DISCIPLINE[algo])

    @property
    def status(self) -> str:
        if not self.run.done:
            return "running"
        return "found" if self.run.result.found else "exhausted"

    def initial_events(self) -> list[tuple[str, dict]]:
        return [
            (
                "search_started",
                {
                    "algo": self.algo,
                    "discipline": self.run.discipline,
                    "initial": self.graph.initial,
                },
            )
        ]

    def apply(self, role: str, action: dict) -> list[tuple[str, dict]]:
        if role != "algorithm":
            raise IllegalAction(f"role {role!r} cannot drive the search")
        kind = action.get("type")
        if self.run.done:
            raise GameOver("search already finished")
        if kind == "step":
            events = self.run.step()
        elif kind == "run":
            events = []
            while not self.run.done:
                events.extend(self.run.step())
        else:
            raise IllegalAction(f"unknown search action {kind!r}")
        return [(e["event"], {k: v for k, v in e.items() if k != "event"}) for e in events]

    def view(self, role: str) -> dict:
        base = {
            "algo": self.algo,
            "discipline": self.run.discipline,
            "status": self.status,
            "expansions": self.run.expansions,
        }
        if role == "algorithm":
            base.update(
                visited=sorted(self.run.expanded),
                parents={c: list(p) for c, p in self.run.trace.parents.items()},
                initial=self.graph.initial,
                result=self.run.result.to_dict() if self.run.done else None,
            )
        elif role == "successor_dictionary":
            base.update(edges=search.graph_to_body(self.graph)["edges"])
        elif role == "goal_test":
            body = search.graph_to_body(self.graph)
            base.update(goal=body["goal"], heuristic=body.get("heuristic"))
        elif role == "frontier":
            base.update(frontier=self.run.frontier.contents())
        elif role == "observer":
            base.update(
                scenario=search.graph_to_body(self.graph),
                visited=sorted(self.run.expanded),
                parents={c: list(p) for c, p in self.run.trace.parents.items()},
                frontier=self.run.frontier.contents(),
                result=self.run.result.to_dict() if self.run.done else None,
                trace_events=len(self.run.trace.events),
            )
        return base


class RbjEngine:
    activity = "rbj"

    def __init__(self, doc: ScenarioDocument, seed: int, options: dict):
        self.deck = doc.spec
        self.game = rbj.RbjGame(self.deck, RandomSource(seed))

    @property
    def status(self) -> str:
        return "running" if self.game.running else "finished"

    def initial_events(self) -> list[tuple[str, dict]]:
        return [("deal_started", {"state": [0, 0], "jackpot_rule": self.deck.jackpot_rule})]

    def apply(self, role: str, action: dict) -> list[tuple[str, dict]]:
        if role != "player":
            raise IllegalAction(f"role {role!r} cannot play")
        if not self.game.running:
            raise GameOver("game already finished")
        kind = action.get("type")
        if kind not in ("hit", "stand"):
            raise IllegalAction(f"unknown action {kind!r}")
        entry = self.game.apply(rbj.HIT if kind == "hit" else rbj.STAND)
        events = [("card_drawn", dict(entry))]
        if not self.game.running:
            outcome = self.game.outcome()
            events.append(
                ("game_over", {"terminal": outcome.terminal, "score": outcome.score})
            )
        return events

    def view(self, role: str) -> dict:
        base = {
            "state": list(self.game.state),
            "status": self.status,
            "legal_actions": [a.lower() for a in self.game.legal_actions()],
            "draws": [dict(e) for e in self.game.log],
        }
        if not self.game.running:
            outcome = self.game.outcome()
            base.update(terminal=outcome.terminal, score=outcome.score)
        if role in ("dealer", "observer"):
            base.update(
                remaining_deck=self.game.remaining_hit_deck(),
                scenario=rbj.deck_to_body(self.deck),
            )
        return base


class QmazeEngine:
    activity = "qmaze"

    def __init__(self, doc: ScenarioDocument, seed: int, options: dict):
        self.grid = doc.spec
        self.params = qmaze.QParams(
            alpha=float(options.get("alpha", 0.5)),
            gamma=float(options.get("gamma", 0.9)),
            explore_faces=int(options.get("explore_faces", 2)),
            die_faces=int(options.get("die_faces", 6)),
            step_budget=options.get("step_budget"),
        )
        self.rs = RandomSource(seed)
        self.q = qmaze.QTable.zeros(self.grid)
        self.episode = 1
        self.position = self.grid.start
        self.steps_used = 0
        self.episode_done = False
        self.revealed: set[tuple[int, int]] = {self.grid.start}

    @property
    def status(self) -> str:
        return "running"

    @property
    def budget(self) -> int:
        if self.params.step_budget is not None:
            return self.params.step_budget
        return self.grid.width + self.grid.height

    def initial_events(self) -> list[tuple[str, dict]]:
        return [
            (
                "episode_started",
                {"episode": 1, "position": list(self.grid.start), "budget": self.budget},
            )
        ]

    def apply(self, role: str, action: dict) -> list[tuple[str, dict]]:
        if role != "player":
            raise IllegalAction(f"role {role!r} cannot walk the maze")
        kind = action.get("type")
        if kind == "reset":
            self.episode += 1
            self.position = self.grid.start
            self.steps_used = 0
            self.episode_done = False
            return [
                (
                    "episode_started",
                    {
                        "episode": self.episode,
                        "position": list(self.grid.start),
                        "budget": self.budget,
                    },
                )
            ]
        if kind != "step":
            raise IllegalAction(f"unknown action {kind!r}")
        if self.episode_done:
            raise IllegalAction("episode finished; reset to start another")
        choice = qmaze.select_action(self.q, self.position, self.params, self.rs)
        q_before = self.q.entries[(self.position, choice.action)]
        nxt, reward, done = qmaze.env_step(self.grid, self.position, choice.action, self.rs)
        q_after = qmaze.q_update(
            self.q, self.position, choice.action, reward, nxt, self.params, done
        )
        step = qmaze.EpisodeStep(
            state=self.position,
            roll=choice.roll,
            explored=choice.explored,
            action_roll=choice.action_roll,
            action=choice.action,
            reward=reward,
            next_state=nxt,
            q_before=q_before,
            q_after=q_after,
        )
        self.position = nxt
        self.steps_used += 1
        self.revealed.add(nxt)
        events = [("q_step", step.to_dict())]
        if done:
            self.episode_done = True
            events.append(("episode_ended", {"episode": self.episode, "reason": "terminal"}))
        elif self.steps_used >= self.budget:
            self.episode_done = True
            events.append(
                ("episode_ended", {"episode": self.episode, "reason": "budget_exhausted"})
            )
        return events

    def view(self, role: str) -> dict:
        base = {
            "episode": self.episode,
            "position": list(self.position),
            "steps_used": self.steps_used,
            "budget": self.budget,
            "episode_done": self.episode_done,
            "width": self.grid.width,
            "height": self.grid.height,
            "start": list(self.grid.start),
            "q_table": self.q.to_jsonable(),
            "status": self.status,
        }
        if role == "player":
            base["revealed"] = [
                {
                    "pos": list(cell),
                    "reward": self.grid.cells[cell].reward,
                    "terminal": self.grid.cells[cell].terminal,
                }
                for cell in sorted(self.revealed)
            ]
        else:
            base["scenario"] = qmaze.grid_to_body(self.grid)
        return base


class TwoSpiesEngine:
    activity = "twospies"

    def __init__(self, doc: ScenarioDocument, seed: int, options: dict):
        self.spec = doc.spec
        self.model = hmm.build_hmm(self.spec)
        self.rs = RandomSource(seed)
        self.game = hmm.new_game(self.spec, self.model, self.rs)

    @property
    def status(self) -> str:
        return self.game.status

    def initial_events(self) -> list[tuple[str, dict]]:
        return [
            (
                "game_started",
                {
                    "round": 0,
                    "rounds_total": self.game.rounds_total,
                    "hunter_city": self.game.hunter_city,
                },
            )
        ]

    def apply(self, role: str, action: dict) -> list[tuple[str, dict]]:
        if role != "hunter":
            raise IllegalAction(f"role {role!r} cannot act; the spy is dice-driven")
        hmm.hunter_apply(self.game, action, self.model, self.rs)
        record = self.game.history[-1]
        events = [
            ("spy_moved", {"round": record.round, "spy_city": record.spy_city}),
            ("round_resolved", record.hunter_facing()),
        ]
        if self.game.status == "running" or self.game.status == "evaded":
            events.append(
                (
                    "belief_updated",
                    {"round": record.round, "belief": self.game.belief.as_dict(self.model)},
                )
            )
        if self.game.status != "running":
            events.append(
                ("game_over", {"status": self.game.status, "rounds_played": self.game.round})
            )
        return events

    def view(self, role: str) -> dict:
        base = {
            "round": self.game.round,
            "rounds_total": self.game.rounds_total,
            "hunter_city": self.game.hunter_city,
            "status": self.game.status,
            "map": hmm.map_to_body(self.spec),
        }
        if role == "hunter":
            base.update(
                history=[rec.hunter_facing() for rec in self.game.history],
                belief=self.game.belief.as_dict(self.model),
            )
        elif role == "spy":
            base.update(
                spy_city=self.game.spy_city,
                history=[rec.full() for rec in self.game.history],
            )
        else:
            base.update(
                spy_city=self.game.spy_city,
                history=[rec.full() for rec in self.game.history],
                belief=self.game.belief.as_dict(self.model),
            )
        return base


_ENGINES = {
    "search": SearchEngine,
    "rbj": RbjEngine,
    "qmaze": QmazeEngine,
    "twospies": TwoSpiesEngine,
}

#: Event types withheld from a role's stream (beyond key-level view redaction).
_EVENT_BLOCKLIST = {
    ("twospies", "hunter"): {"spy_moved"},
    ("twospies", "spy"): {"belief_updated"},
}


def redact_event(activity: str, role: str, event: Event) -> dict | None:
    """Role-facing projection of one event, or None if fully withheld."""
    if role != "observer" and event.type in _EVENT_BLOCKLIST.get((activity, role), ()):
        return None
    return {"index": event.index, "type": event.type, "payload": event.payload}


# -- session records and the store -------------------------------------------

@dataclass
class SessionRecord:
    session_id: str
    activity: str
    scenario: dict  # full envelope, exactly as validated
    seed: int
    options: dict
    events: list[Event] = field(default_factory=list)
    status: str = "running"

    def header(self) -> dict:
        return {
            "session_id": self.session_id,
            "activity": self.activity,
            "scenario": self.scenario,
            "seed": self.seed,
            "options": self.options,
        }


class Session:
    """Live session: record + engine + the concurrency primitives the service
    uses to serialize actions and wake event subscribers."""

    def __init__(self, record: SessionRecord, engine):
        self.record = record
        self.engine = engine
        self.lock = asyncio.Lock()
        self.new_events = asyncio.Condition()

    @property
    def last_index(self) -> int:
        return self.record.events[-1].index if self.record.events else -1


def generate_seed() -> int:
    # 48 bits so seeds survive a JSON round trip through doubles
    return int.from_bytes(os.urandom(6), "big")


def build_engine(activity: str, doc: ScenarioDocument, seed: int, options: dict):
    if activity not in ACTIVITIES:
        raise UnsupportedActivity(f"unknown activity {activity!r}")
    if doc.kind != KIND_FOR_ACTIVITY[activity]:
        raise UnsupportedActivity(
            f"activity {activity!r} needs a {KIND_FOR_ACTIVITY[activity]!r} scenario, "
            f"got {doc.kind!r}"
        )
    return _ENGINES[activity](doc, seed, options)


class SessionStore:
    """In-memory session index with optional JSON-Lines persistence."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}

    def create(
        self,
        activity: str,
        doc: ScenarioDocument,
        seed: int | None = None,
        options: dict | None = None,
        envelope: dict | None = None,
    ) -> Session:
        options = dict(options or {})
        if seed is None:
            seed = generate_seed()
        engine = build_engine(activity, doc, seed, options)
        if envelope is None:
            from .scenario import serialize_scenario

            envelope = json.loads(serialize_scenario(doc))
        record = SessionRecord(
            session_id=uuid.uuid4().hex[:12],
            activity=activity,
            scenario=envelope,
            seed=seed,
            options=options,
        )
        session = Session(record, engine)
        self._append(session, "system", "session_created", {
            "activity": activity, "seed": seed, "options": options,
        })
        for etype, payload in engine.initial_events():
            self._append(session, "system", etype, payload)
        self._sessions[record.session_id] = session
        self._persist_header(record)
        for event in record.events:
            self._persist_event(record, event)
        return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def ids(self) -> list[str]:
        return list(self._sessions)

    def view(self, session_id: str, role: str) -> dict:
        session = self.get(session_id)
        self._check_role(session.record.activity, role)
        payload = session.engine.view(role)
        return {
            "session_id": session_id,
            "activity": session.record.activity,
            "role": role,
            "last_index": session.last_index,
            "payload": payload,
        }

    def apply_action(
        self, session_id: str, role: str, action: dict, expected_index: int
    ) -> list[Event]:
        """Validate, run the engine, append the action + derived events."""
        session = self.get(session_id)
        record = session.record
        self._check_role(record.activity, role)
        if expected_index != session.last_index:
            raise StaleSession(
                f"expected event index {session.last_index}, got {expected_index}"
            )
        emitted = session.engine.apply(role, action)
        start = len(record.events)
        self._append(session, role, "action", {"action": action, "role": role})
        for etype, payload in emitted:
            self._append(session, "engine", etype, payload)
        record.status = session.engine.status
        for event in record.events[start:]:
            self._persist_event(record, event)
        return record.events[start:]

    def _check_role(self, activity: str, role: str):
        if role not in ROLES[activity]:
            raise UnknownRole(f"no role {role!r} for activity {activity!r}")

    def _append(self, session: Session, actor: str, etype: str, payload: dict):
        record = session.record
        event = Event(
            index=len(record.events),
            ts=time.time(),
            actor=actor,
            type=etype,
            payload=payload,
        )
        record.events.append(event)

    def _path(self, record: SessionRecord) -> Path | None:
        if self.directory is None:
            return None
        return self.directory / f"{record.session_id}.jsonl"

    def _persist_header(self, record: SessionRecord):
        path = self._path(record)
        if path is None:
            return
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"header": record.header()}, sort_keys=True) + "\n")

    def _persist_event(self, record: SessionRecord, event: Event):
        path = self._path(record)
        if path is None:
            return
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"event": event.to_dict()}, sort_keys=True) + "\n")


# -- replay -------------------------------------------------------------------

def final_state(session_id: str, activity: str, engine, event_count: int) -> str:
    """Canonical serialization of a session's end state (timestamps excluded)."""
    doc = {
        "session_id": session_id,
        "activity": activity,
        "status": engine.status,
        "event_count": event_count,
        "view": engine.view("observer"),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def live_final_state(session: Session) -> str:
    return final_state(
        session.record.session_id,
        session.record.activity,
        session.engine,
        len(session.record.events),
    )


def _canon(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def replay(record: SessionRecord) -> str:
    """Reconstruct the final state from a record, verifying every derived event.

    Raises :class:`CorruptLog` on index gaps or any divergence between logged
    engine events and the events regenerated from the logged actions.
    """
    for position, event in enumerate(record.events):
        if event.index != position:
            raise CorruptLog(
                f"event index gap: position {position} holds index {event.index}"
            )
    doc = parse_scenario(json.dumps(record.scenario))
    engine = build_engine(record.activity, doc, record.seed, record.options)
    expected_setup = [("session_created", {
        "activity": record.activity, "seed": record.seed, "options": record.options,
    })] + engine.initial_events()
    cursor = 0
    for etype, payload in expected_setup:
        if cursor >= len(record.events):
            raise CorruptLog("log ends inside the setup events")
        logged = record.events[cursor]
        if logged.type != etype or _canon(logged.payload) != _canon(payload):
            raise CorruptLog(f"setup event {cursor} diverges from the scenario")
        cursor += 1
    while cursor < len(record.events):
        logged = record.events[cursor]
        if logged.type != "action":
            raise CorruptLog(f"expected an action at index {cursor}, found {logged.type!r}")
        emitted = engine.apply(logged.payload["role"], logged.payload["action"])
        cursor += 1
        for etype, payload in emitted:
            if cursor >= len(record.events):
                raise CorruptLog("log ends inside a derived-event block")
            expected = record.events[cursor]
            if expected.type != etype or _canon(expected.payload) != _canon(payload):
                raise CorruptLog(
                    f"derived event {cursor} diverges on replay "
                    f"({expected.type!r} vs {etype!r})"
                )
            cursor += 1
    return final_state(record.session_id, record.activity, engine, len(record.events))


def load_record(path: str | Path) -> SessionRecord:
    """Read one persisted session back from its JSON-Lines file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorruptLog(f"{path} is empty")
    header_doc = json.loads(lines[0])
    if "header" not in header_doc:
        raise CorruptLog(f"{path} does not start with a session header")
    header = header_doc["header"]
    record = SessionRecord(
        session_id=header["session_id"],
        activity=header["activity"],
        scenario=header["scenario"],
        seed=header["seed"],
        options=header.get("options", {}),
    )
    for line in lines[1:]:
        doc = json.loads(line)
        if "event" not in doc:
            raise CorruptLog(f"stray line in {path}")
        record.events.append(Event.from_dict(doc["event"]))
    return record
