"""Role-decomposed graph search.

The four classroom roles are separable here: :func:`successors` is the
successor dictionary, :func:`goal_test` the goal test, :class:`Frontier` the
frontier, and :class:`SearchRun` the algorithm that orchestrates them. One
engine runs BFS, DFS, UCS, Greedy, and A* -- only the frontier discipline
changes:

==================  =========================================
discipline          pops
==================  =========================================
``fifo``            insertion order (BFS)
``lifo``            reverse insertion order (DFS)
``priority_g``      minimal accumulated cost (UCS)
``priority_h``      minimal heuristic estimate (Greedy)
``priority_g_plus_h``  minimal cost + estimate (A*)
==================  =========================================

Determinism rules, everywhere: successors report in file declaration order,
priority ties break by insertion order, a state is finalized when popped and
stale re-pops are skipped, and the goal test runs at pop time. Re-running a
search yields a byte-identical serialized trace.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import (
    EmptyFrontier,
    InvalidGraph,
    MissingHeuristic,
    PredicateError,
    UnknownState,
    UnreachedState,
)

DISCIPLINES = ("fifo", "lifo", "priority_g", "priority_h", "priority_g_plus_h")

#: CLI algorithm names mapped onto frontier disciplines.
ALGO_TO_DISCIPLINE = {
    "bfs": "fifo",
    "dfs": "lifo",
    "ucs": "priority_g",
    "greedy": "priority_h",
    "astar": "priority_g_plus_h",
}


@dataclass(frozen=True)
class GoalSpec:
    """Either a single goal state id or a conjunction of attribute conditions."""

    variant: str  # "single_state" | "predicate"
    state_id: str | None = None
    conditions: Mapping[str, Any] | None = None

    @staticmethod
    def single(state_id: str) -> "GoalSpec":
        return GoalSpec("single_state", state_id=state_id)

    @staticmethod
    def predicate(conditions: Mapping[str, Any]) -> "GoalSpec":
        return GoalSpec("predicate", conditions=dict(conditions))

    def __post_init__(self):
        if self.variant not in ("single_state", "predicate"):
            raise InvalidGraph(f"unknown goal variant {self.variant!r}")
        if self.variant == "single_state" and self.state_id is None:
            raise InvalidGraph("single_state goal needs a state id")
        if self.variant == "predicate" and not self.conditions:
            raise InvalidGraph("predicate goal needs at least one condition")


@dataclass(frozen=True)
class Edge:
    src: str
    action: str
    dst: str
    cost: float = 1.0


class StateSpaceGraph:
    """Immutable search world: states with attributes, labeled cost edges,
    an initial state, a goal specification, and an optional heuristic table."""

    def __init__(
        self,
        states: Mapping[str, Mapping[str, Any]],
        edges: Iterable[Edge],
        initial: str,
        goal: GoalSpec,
        heuristic: Mapping[str, float] | None = None,
    ):
        self.states = {sid: dict(attrs) for sid, attrs in states.items()}
        self.edges = tuple(edges)
        self.initial = initial
        self.goal = goal
        self.heuristic = dict(heuristic) if heuristic is not None else None
        self._adjacency: dict[str, list[Edge]] = {sid: [] for sid in self.states}
        self._validate()
        for edge in self.edges:
            self._adjacency[edge.src].append(edge)

    def _validate(self):
        if self.initial not in self.states:
            raise InvalidGraph(f"initial state {self.initial!r} is not declared")
        for edge in self.edges:
            for endpoint in (edge.src, edge.dst):
                if endpoint not in self.states:
                    raise InvalidGraph(
                        f"edge {edge.src!r} -[{edge.action}]-> {edge.dst!r} "
                        f"references undeclared state {endpoint!r}"
                    )
            if edge.cost < 0:
                raise InvalidGraph(
                    f"edge {edge.src!r} -[{edge.action}]-> {edge.dst!r} has negative cost"
                )
        if self.goal.variant == "single_state" and self.goal.state_id not in self.states:
            raise InvalidGraph(f"goal state {self.goal.state_id!r} is not declared")
        if self.goal.variant == "predicate":
            for attr in self.goal.conditions:
                if not any(attr in attrs for attrs in self.states.values()):
                    raise InvalidGraph(
                        f"goal condition references attribute {attr!r} "
                        "declared on no state"
                    )
        if self.heuristic is not None:
            missing = set(self.states) - set(self.heuristic)
            if missing:
                raise InvalidGraph(f"heuristic missing entries for {sorted(missing)}")
            for sid, h in self.heuristic.items():
                if sid not in self.states:
                    raise InvalidGraph(f"heuristic names unknown state {sid!r}")
                if h < 0:
                    raise InvalidGraph(f"heuristic for {sid!r} is negative")

    def __eq__(self, other):
        return (
            isinstance(other, StateSpaceGraph)
            and self.states == other.states
            and self.edges == other.edges
            and self.initial == other.initial
            and self.goal == other.goal
            and self.heuristic == other.heuristic
        )


def successors(graph: StateSpaceGraph, s: str) -> list[tuple[str, str, float]]:
    """All outgoing edges of ``s`` as (action, next state, cost), file order."""
    if s not in graph.states:
        raise UnknownState(f"no state {s!r} in graph")
    return [(e.action, e.dst, e.cost) for e in graph._adjacency[s]]


def goal_test(graph: StateSpaceGraph, s: str) -> bool:
    """Does ``s`` satisfy the goal spec?"""
    if s not in graph.states:
        raise UnknownState(f"no state {s!r} in graph")
    goal = graph.goal
    if goal.variant == "single_state":
        return s == goal.state_id
    attrs = graph.states[s]
    for key, wanted in goal.conditions.items():
        if key not in attrs:
            raise PredicateError(
                f"goal condition {key!r} not present on state {s!r}"
            )
        if attrs[key] != wanted:
            return False
    return True


@dataclass
class _Entry:
    state: str
    g: float
    key: float | None
    parent: str | None
    action: str | None


class Frontier:
    """Discovered-but-unexpanded states under one pop discipline.

    Priority variants break key ties by insertion order (FIFO among equals).
    """

    def __init__(self, discipline: str):
        if discipline not in DISCIPLINES:
            raise InvalidGraph(f"unknown frontier discipline {discipline!r}")
        self.discipline = discipline
        self._counter = 0
        if discipline == "fifo":
            self._queue: deque[_Entry] = deque()
        elif discipline == "lifo":
            self._stack: list[_Entry] = []
        else:
            self._heap: list[tuple[float, int, _Entry]] = []

    def __len__(self) -> int:
        if self.discipline == "fifo":
            return len(self._queue)
        if self.discipline == "lifo":
            return len(self._stack)
        return len(self._heap)

    def insert(self, entry: _Entry) -> None:
        self._counter += 1
        if self.discipline == "fifo":
            self._queue.append(entry)
        elif self.discipline == "lifo":
            self._stack.append(entry)
        else:
            if entry.key is None or entry.key != entry.key or entry.key == float("inf"):
                raise InvalidGraph("priority frontier needs a finite key")
            heapq.heappush(self._heap, (entry.key, self._counter, entry))

    def next(self) -> _Entry:
        if len(self) == 0:
            raise EmptyFrontier("frontier is empty")
        if self.discipline == "fifo":
            return self._queue.popleft()
        if self.discipline == "lifo":
            return self._stack.pop()
        return heapq.heappop(self._heap)[2]

    def contents(self) -> list[dict]:
        """Snapshot for role views, in the order entries would pop."""
        if self.discipline == "fifo":
            entries = list(self._queue)
        elif self.discipline == "lifo":
            entries = list(reversed(self._stack))
        else:
            entries = [e for _, _, e in sorted(self._heap, key=lambda t: (t[0], t[1]))]
        return [{"state": e.state, "g": e.g, "key": e.key} for e in entries]


def frontier_insert(f: Frontier, state: str, g: float, key: float | None = None) -> None:
    f.insert(_Entry(state, g, key, None, None))


def frontier_next(f: Frontier) -> tuple[str, float, float | None]:
    e = f.next()
    return e.state, e.g, e.key


@dataclass
class SearchTrace:
    """Ordered role events plus the parent tree built during one search."""

    initial: str
    discipline: str
    events: list[dict] = field(default_factory=list)
    parents: dict[str, tuple[str, str]] = field(default_factory=dict)

    def record(self, kind: str, **payload) -> None:
        self.events.append({"event": kind, **payload})

    def to_json(self) -> str:
        doc = {
            "initial": self.initial,
            "discipline": self.discipline,
            "events": self.events,
            "parents": {c: list(pa) for c, pa in self.parents.items()},
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass
class SearchResult:
    found: bool
    path_states: list[str]
    path_actions: list[str]
    total_cost: float
    expansions: int
    trace: SearchTrace

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "path_states": self.path_states,
            "path_actions": self.path_actions,
            "total_cost": self.total_cost,
            "expansions": self.expansions,
        }


def reconstruct_path(trace: SearchTrace, goal: str) -> tuple[list[str], list[str]]:
    """Walk the parent tree from ``goal`` back to the initial state."""
    if goal != trace.initial and goal not in trace.parents:
        raise UnreachedState(f"{goal!r} was never reached in this trace")
    states = [goal]
    actions: list[str] = []
    current = goal
    while current != trace.initial:
        parent, action = trace.parents[current]
        states.append(parent)
        actions.append(action)
        current = parent
    states.reverse()
    actions.reverse()
    return states, actions


class SearchRun:
    """One in-progress search, steppable one expansion at a time.

    ``graph_search`` drives it to completion; the session service steps it
    interactively. Both paths share this loop, so traces agree.
    """

    def __init__(self, graph: StateSpaceGraph, discipline: str):
        if discipline in ("priority_h", "priority_g_plus_h") and graph.heuristic is None:
            raise MissingHeuristic(f"{discipline} requires a heuristic table")
        self.graph = graph
        self.discipline = discipline
        self.frontier = Frontier(discipline)
        self.expanded: set[str] = set()
        self.trace = SearchTrace(initial=graph.initial, discipline=discipline)
        self.result: SearchResult | None = None
        self.expansions = 0
        self._insert(graph.initial, 0.0, None, None)

    def _key(self, state: str, g: float) -> float | None:
        if self.discipline == "priority_g":
            return g
        if self.discipline == "priority_h":
            return self.graph.heuristic[state]
        if self.discipline == "priority_g_plus_h":
            return g + self.graph.heuristic[state]
        return None

    def _insert(self, state: str, g: float, parent: str | None, action: str | None):
        key = self._key(state, g)
        self.frontier.insert(_Entry(state, g, key, parent, action))
        self.trace.record("frontier_insert", state=state, g=g, key=key)

    @property
    def done(self) -> bool:
        return self.result is not None

    def step(self) -> list[dict]:
        """Pop-test-expand one state. Returns the trace events it produced."""
        if self.done:
            return []
        start = len(self.trace.events)
        while True:
            try:
                entry = self.frontier.next()
            except EmptyFrontier:
                self.result = SearchResult(
                    found=False, path_states=[], path_actions=[],
                    total_cost=0.0, expansions=self.expansions, trace=self.trace,
                )
                self.trace.record("finished", found=False)
                return self.trace.events[start:]
            self.trace.record("frontier_pop", state=entry.state, g=entry.g, key=entry.key)
            if entry.state not in self.expanded:
                break
            # stale duplicate: the state was finalized by an earlier pop
        self.expanded.add(entry.state)
        self.expansions += 1
        self.trace.record("visit_mark", state=entry.state)
        if entry.parent is not None:
            self.trace.parents[entry.state] = (entry.parent, entry.action)
        hit = goal_test(self.graph, entry.state)
        self.trace.record("goal_test", state=entry.state, result=hit)
        if hit:
            states, actions = reconstruct_path(self.trace, entry.state)
            self.result = SearchResult(
                found=True, path_states=states, path_actions=actions,
                total_cost=entry.g, expansions=self.expansions, trace=self.trace,
            )
            self.trace.record("finished", found=True, state=entry.state, cost=entry.g)
            return self.trace.events[start:]
        succ = successors(self.graph, entry.state)
        self.trace.record(
            "successor_query",
            state=entry.state,
            results=[{"action": a, "state": t, "cost": c} for a, t, c in succ],
        )
        for action, nxt, cost in succ:
            if nxt in self.expanded:
                continue
            self._insert(nxt, entry.g + cost, entry.state, action)
        return self.trace.events[start:]


def graph_search(graph: StateSpaceGraph, discipline: str) -> SearchResult:
    """Run a full search under the given frontier discipline."""
    run = SearchRun(graph, discipline)
    while not run.done:
        run.step()
    return run.result


def true_goal_distances(graph: StateSpaceGraph) -> dict[str, float]:
    """Cheapest cost from each state to any goal state (inf if none reachable).

    Dijkstra over reversed edges; used to warn about inadmissible heuristics
    on graphs small enough to check.
    """
    goals = [s for s in graph.states if _safe_goal(graph, s)]
    reverse: dict[str, list[tuple[str, float]]] = {s: [] for s in graph.states}
    for e in graph.edges:
        reverse[e.dst].append((e.src, e.cost))
    dist = {s: float("inf") for s in graph.states}
    heap: list[tuple[float, str]] = []
    for g in goals:
        dist[g] = 0.0
        heapq.heappush(heap, (0.0, g))
    while heap:
        d, s = heapq.heappop(heap)
        if d > dist[s]:
            continue
        for prev, cost in reverse[s]:
            nd = d + cost
            if nd < dist[prev]:
                dist[prev] = nd
                heapq.heappush(heap, (nd, prev))
    return dist


def _safe_goal(graph: StateSpaceGraph, s: str) -> bool:
    try:
        return goal_test(graph, s)
    except PredicateError:
        return False


def heuristic_warnings(graph: StateSpaceGraph, max_states: int = 64) -> list[str]:
    """Admissibility warnings: entries where h(s) exceeds the true distance."""
    if graph.heuristic is None or len(graph.states) > max_states:
        return []
    dist = true_goal_distances(graph)
    warnings = []
    for sid, h in sorted(graph.heuristic.items()):
        if h > dist[sid] + 1e-12:
            warnings.append(
                f"heuristic for {sid!r} is {h}, exceeding true goal distance {dist[sid]}"
            )
    return warnings


# -- scenario body (kind "search") ------------------------------------------

def graph_from_body(body: dict) -> StateSpaceGraph:
    from .scenario import body_field, require_keys

    require_keys(body, {"states", "edges", "initial", "goal"}, optional={"heuristic"})
    states = {}
    for entry in body_field(body, "states", list):
        sid = entry["id"]
        if sid in states:
            raise InvalidGraph(f"duplicate state id {sid!r}")
        states[sid] = entry.get("attrs", {})
    edges = [
        Edge(e["from"], e["action"], e["to"], float(e.get("cost", 1)))
        for e in body_field(body, "edges", list)
    ]
    goal_body = body["goal"]
    if goal_body.get("type") == "state_id":
        goal = GoalSpec.single(goal_body["id"])
    elif goal_body.get("type") == "predicate":
        goal = GoalSpec.predicate(goal_body["conditions"])
    else:
        raise InvalidGraph(f"unknown goal type {goal_body.get('type')!r}")
    heuristic = body.get("heuristic")
    if heuristic is not None:
        heuristic = {sid: float(h) for sid, h in heuristic.items()}
    return StateSpaceGraph(states, edges, body["initial"], goal, heuristic)


def graph_to_body(graph: StateSpaceGraph) -> dict:
    if graph.goal.variant == "single_state":
        goal = {"type": "state_id", "id": graph.goal.state_id}
    else:
        goal = {"type": "predicate", "conditions": dict(graph.goal.conditions)}
    body = {
        "states": [
            {"id": sid, **({"attrs": attrs} if attrs else {})}
            for sid, attrs in graph.states.items()
        ],
        "edges": [
            {"from": e.src, "action": e.action, "to": e.dst, "cost": e.cost}
            for e in graph.edges
        ],
        "initial": graph.initial,
        "goal": goal,
    }
    if graph.heuristic is not None:
        body["heuristic"] = dict(graph.heuristic)
    return body
