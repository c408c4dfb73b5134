"""Gridworld Q-learning with the dice-roll explore/exploit protocol.

A grid cell is a whiteboard: its reward sits in the middle, the available
actions (fewer on edges and next to walls) around the outside, one Q entry per
action. An episode walks the grid from the start cell, one die roll deciding
explore vs. exploit per step, and runs the tabular Bellman update after each
move. Training is strictly sequential -- episodes share one table, like
students sharing the classroom grid.

Action order is fixed as N, E, S, W for argmax ties and iteration; ``N`` moves
toward row 0 (up, in the matrix convention used throughout).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DomainError,
    InvalidGrid,
    MissingRow,
    UnavailableAction,
    UnknownKey,
)
from .rng import RandomSource, dice_roll, sample_categorical

ACTIONS = ("N", "E", "S", "W")
_DELTAS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}

Cell = tuple[int, int]


@dataclass(frozen=True)
class CellSpec:
    reward: float
    terminal: bool = False


@dataclass(frozen=True)
class QParams:
    """Learning-rate / discount / exploration knobs, dice-expressible.

    ``explore_faces`` out of ``die_faces`` means explore; ``step_budget``
    defaults to grid width + height when left unset.
    """

    alpha: float
    gamma: float
    explore_faces: int
    die_faces: int = 6
    step_budget: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must be in [0,1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must be in [0,1], got {self.gamma}")
        if self.die_faces < 1:
            raise DomainError("die must have at least one face")
        if not 0 <= self.explore_faces <= self.die_faces:
            raise DomainError("explore_faces must be between 0 and die_faces")
        if self.step_budget is not None and self.step_budget < 1:
            raise DomainError("step budget must be positive")


class GridSpec:
    """Rectangular grid: per-cell reward/terminal flags, optional walls,
    optional slip probability (off in every bundled scenario)."""

    def __init__(
        self,
        width: int,
        height: int,
        start: Cell,
        cells: dict[Cell, CellSpec],
        walls: set[frozenset] | None = None,
        slip: Fraction = Fraction(0),
        random_start: bool = False,
    ):
        self.width = width
        self.height = height
        self.start = tuple(start)
        self.cells = dict(cells)
        self.walls = frozenset(walls or ())
        self.slip = Fraction(slip)
        self.random_start = random_start
        self._validate()

    def _validate(self):
        if self.width < 1 or self.height < 1:
            raise InvalidGrid("grid dimensions must be positive")
        expected = {(x, y) for x in range(self.width) for y in range(self.height)}
        declared = set(self.cells)
        if declared != expected:
            missing = sorted(expected - declared)
            extra = sorted(declared - expected)
            raise InvalidGrid(
                f"cells must cover the grid exactly (missing {missing}, extra {extra})"
            )
        if self.start not in expected:
            raise InvalidGrid(f"start {self.start} is out of bounds")
        if self.cells[self.start].terminal:
            raise InvalidGrid("start cell must not be terminal")
        for wall in self.walls:
            pair = tuple(wall)
            if len(pair) != 2:
                raise InvalidGrid(f"wall {sorted(wall)} must join two cells")
            a, b = pair
            if a not in expected or b not in expected:
                raise InvalidGrid(f"wall {sorted(wall)} is out of bounds")
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise InvalidGrid(f"wall {sorted(wall)} must join adjacent cells")
        if not 0 <= self.slip < 1:
            raise InvalidGrid("slip probability must be in [0,1)")

    def __eq__(self, other):
        return isinstance(other, GridSpec) and (
            self.width, self.height, self.start, self.cells,
            self.walls, self.slip, self.random_start,
        ) == (
            other.width, other.height, other.start, other.cells,
            other.walls, other.slip, other.random_start,
        )

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def neighbor(self, cell: Cell, action: str) -> Cell | None:
        """Destination of ``action`` from ``cell``, or None if blocked."""
        dx, dy = _DELTAS[action]
        nxt = (cell[0] + dx, cell[1] + dy)
        if not self.in_bounds(nxt):
            return None
        if frozenset((cell, nxt)) in self.walls:
            return None
        return nxt

    def available_actions(self, cell: Cell) -> tuple[str, ...]:
        """Actions usable from ``cell`` in N,E,S,W order; none on terminals."""
        if not self.in_bounds(cell):
            raise InvalidGrid(f"cell {cell} is out of bounds")
        if self.cells[cell].terminal:
            return ()
        return tuple(a for a in ACTIONS if self.neighbor(cell, a) is not None)

    def non_terminal_cells(self) -> list[Cell]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if not self.cells[(x, y)].terminal
        ]


class QTable:
    """Tabular action values; keys are exactly the available (cell, action) pairs."""

    def __init__(self, entries: dict[tuple[Cell, str], float]):
        self.entries = dict(entries)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "QTable":
        entries = {}
        for cell in grid.non_terminal_cells():
            for action in grid.available_actions(cell):
                entries[(cell, action)] = 0.0
        return cls(entries)

    def row(self, cell: Cell) -> dict[str, float]:
        row = {a: v for (c, a), v in self.entries.items() if c == cell}
        if not row:
            raise MissingRow(f"no Q entries for cell {cell}")
        return row

    def argmax(self, cell: Cell, order: tuple[str, ...] = ACTIONS) -> str:
        row = self.row(cell)
        best = max(row.values())
        for action in order:
            if action in row and row[action] == best:
                return action
        raise MissingRow(f"no action attains the maximum at {cell}")  # pragma: no cover

    def copy(self) -> "QTable":
        return QTable(self.entries)

    def to_jsonable(self) -> dict[str, float]:
        return {
            f"({c[0]},{c[1]}):{a}": v
            for (c, a), v in sorted(self.entries.items())
        }

    def __eq__(self, other):
        return isinstance(other, QTable) and self.entries == other.entries


def env_step(
    grid: GridSpec, s: Cell, a: str, rs: RandomSource | None = None
) -> tuple[Cell, float, bool]:
    """Execute one move. Reward is the entered cell's reward; done iff it is
    terminal. A random source is only needed when the grid has slip enabled."""
    if a not in ACTIONS:
        raise UnavailableAction(f"unknown action {a!r}")
    if a not in grid.available_actions(s):
        raise UnavailableAction(f"action {a!r} is not available at {s}")
    executed = a
    if grid.slip > 0:
        if rs is None:
            raise DomainError("grid has slip enabled; env_step needs a RandomSource")
        slipped = sample_categorical(
            rs, [(True, grid.slip), (False, 1 - grid.slip)]
        )
        others = [x for x in grid.available_actions(s) if x != a]
        if slipped and others:
            executed = others[dice_roll(rs, len(others)) - 1]
    nxt = grid.neighbor(s, executed)
    spec = grid.cells[nxt]
    return nxt, spec.reward, spec.terminal


@dataclass(frozen=True)
class ActionChoice:
    action: str
    explored: bool
    roll: int
    action_roll: int | None = None


def select_action(q: QTable, s: Cell, params: QParams, rs: RandomSource) -> ActionChoice:
    """One die roll decides explore vs. exploit (roll <= explore_faces means
    explore); exploring rolls again to pick uniformly among available actions.

    Availability comes from the table's own keys, which mirror the grid.
    """
    row = q.row(s)
    available = tuple(a for a in ACTIONS if a in row)
    roll = dice_roll(rs, params.die_faces)
    if roll <= params.explore_faces:
        action_roll = dice_roll(rs, len(available))
        return ActionChoice(available[action_roll - 1], True, roll, action_roll)
    return ActionChoice(q.argmax(s), False, roll)


def q_update(
    q: QTable,
    s: Cell,
    a: str,
    r: float,
    s_next: Cell,
    params: QParams,
    next_terminal: bool,
) -> float:
    """Blend the old estimate with the observed reward plus discounted future:
    Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma * max_a' Q(s',a'))."""
    if (s, a) not in q.entries:
        raise UnknownKey(f"no Q entry for {(s, a)}")
    future = 0.0
    if not next_terminal:
        future = max(q.row(s_next).values())
    updated = (1 - params.alpha) * q.entries[(s, a)] + params.alpha * (
        r + params.gamma * future
    )
    q.entries[(s, a)] = updated
    return updated


@dataclass
class EpisodeStep:
    state: Cell
    roll: int
    explored: bool
    action_roll: int | None
    action: str
    reward: float
    next_state: Cell
    q_before: float
    q_after: float

    def to_dict(self) -> dict:
        return {
            "state": list(self.state),
            "roll": self.roll,
            "explored": self.explored,
            "action_roll": self.action_roll,
            "action": self.action,
            "reward": self.reward,
            "next_state": list(self.next_state),
            "q_before": self.q_before,
            "q_after": self.q_after,
        }


@dataclass
class EpisodeLog:
    start: Cell
    steps: list[EpisodeStep] = field(default_factory=list)
    termination: str = "budget_exhausted"  # or "terminal"

    @property
    def total_reward(self) -> float:
        return sum(step.reward for step in self.steps)

    def to_dict(self) -> dict:
        return {
            "start": list(self.start),
            "steps": [s.to_dict() for s in self.steps],
            "termination": self.termination,
        }


def run_episode(grid: GridSpec, q: QTable, params: QParams, rs: RandomSource) -> EpisodeLog:
    """One pass through the maze, mutating ``q`` in place.

    Stops on entering a terminal cell or after the step budget (width + height
    by default) is spent.
    """
    budget = params.step_budget if params.step_budget is not None else grid.width + grid.height
    state = grid.start
    if grid.random_start:
        candidates = grid.non_terminal_cells()
        state = candidates[dice_roll(rs, len(candidates)) - 1]
    log = EpisodeLog(start=state)
    for _ in range(budget):
        choice = select_action(q, state, params, rs)
        q_before = q.entries[(state, choice.action)]
        nxt, reward, done = env_step(grid, state, choice.action, rs)
        q_after = q_update(q, state, choice.action, reward, nxt, params, done)
        log.steps.append(
            EpisodeStep(
                state=state,
                roll=choice.roll,
                explored=choice.explored,
                action_roll=choice.action_roll,
                action=choice.action,
                reward=reward,
                next_state=nxt,
                q_before=q_before,
                q_after=q_after,
            )
        )
        state = nxt
        if done:
            log.termination = "terminal"
            return log
    return log


@dataclass
class TrainResult:
    q: QTable
    snapshots: dict[int, QTable]
    returns: list[float]


def train(
    grid: GridSpec,
    params: QParams,
    n_episodes: int,
    snapshot_at: list[int] | None = None,
    rs: RandomSource | None = None,
) -> TrainResult:
    """Sequential episodes over one shared table, with deep-copied snapshots.

    ``snapshot_at`` indices count completed episodes, so 0 is the untouched
    all-zero table.
    """
    if n_episodes < 1:
        raise DomainError("need at least one episode")
    if rs is None:
        raise DomainError("training needs a RandomSource")
    wanted = set(snapshot_at or ())
    for idx in wanted:
        if not 0 <= idx <= n_episodes:
            raise DomainError(f"snapshot index {idx} outside [0, {n_episodes}]")
    q = QTable.zeros(grid)
    snapshots: dict[int, QTable] = {}
    returns: list[float] = []
    max_reward = max(abs(c.reward) for c in grid.cells.values())
    bound = max_reward / (1 - params.gamma) if params.gamma < 1 else None
    if 0 in wanted:
        snapshots[0] = q.copy()
    for episode in range(1, n_episodes + 1):
        log = run_episode(grid, q, params, rs)
        returns.append(log.total_reward)
        if bound is not None:
            worst = max(abs(v) for v in q.entries.values()) if q.entries else 0.0
            assert worst <= bound + 1e-9, "Q values escaped the R/(1-gamma) bound"
        if episode in wanted:
            snapshots[episode] = q.copy()
    return TrainResult(q=q, snapshots=snapshots, returns=returns)


def greedy_policy(q: QTable, grid: GridSpec) -> dict[Cell, str]:
    """Per-cell argmax under the fixed N,E,S,W tie order."""
    return {cell: q.argmax(cell) for cell in grid.non_terminal_cells()}


# -- scenario body (kind "grid") ---------------------------------------------

def grid_from_body(body: dict) -> GridSpec:
    from .scenario import body_field, parse_probability, require_keys

    require_keys(
        body,
        {"width", "height", "start", "cells"},
        optional={"walls", "slip", "random_start"},
    )
    cells = {}
    for entry in body_field(body, "cells", list):
        pos = tuple(entry["pos"])
        if pos in cells:
            raise InvalidGrid(f"cell {list(pos)} declared twice")
        cells[pos] = CellSpec(float(entry["reward"]), bool(entry.get("terminal", False)))
    walls = {
        frozenset((tuple(a), tuple(b))) for a, b in body.get("walls", [])
    }
    slip = parse_probability(body["slip"]) if "slip" in body else Fraction(0)
    return GridSpec(
        width=int(body["width"]),
        height=int(body["height"]),
        start=tuple(body["start"]),
        cells=cells,
        walls=walls,
        slip=slip,
        random_start=bool(body.get("random_start", False)),
    )


def grid_to_body(grid: GridSpec) -> dict:
    from .scenario import format_probability

    body = {
        "width": grid.width,
        "height": grid.height,
        "start": list(grid.start),
        "cells": [
            {
                "pos": [x, y],
                "reward": grid.cells[(x, y)].reward,
                "terminal": grid.cells[(x, y)].terminal,
            }
            for y in range(grid.height)
            for x in range(grid.width)
        ],
    }
    if grid.walls:
        body["walls"] = sorted(
            [sorted([list(a), list(b)]) for a, b in (tuple(w) for w in grid.walls)]
        )
    if grid.slip:
        body["slip"] = format_probability(grid.slip)
    if grid.random_start:
        body["random_start"] = True
    return body
