"""Finite MDPs and value iteration.

Transition probabilities are exact rationals so every (state, action)
distribution can be checked to sum to 1 with no float slack. Rewards are
attached to *entering* a state: terminals pay their entry reward undiscounted
and contribute no stored value, so one Bellman backup reads

    Q(s,a) = sum_d p(d) * (reward_on_entry(d) + gamma * V(d) if d non-terminal
                           else reward_on_entry(d))

Value iteration sweeps synchronously until the sup-norm residual drops below
the tolerance. With gamma = 1 the MDP must be acyclic (validated up front);
backups then converge exactly within longest-chain sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .errors import (
    CyclicUndiscounted,
    DomainError,
    InvalidGrid,
    MissingValue,
    NonConvergence,
    ValidationError,
)
from .qmaze import GridSpec

State = Hashable


class FiniteMdp:
    """States, per-state actions, exact row-stochastic transitions, terminal
    entry rewards, and a discount. Terminals have no outgoing transitions."""

    def __init__(
        self,
        states: Sequence[State],
        terminals: Sequence[State],
        actions: Mapping[State, Sequence[str]],
        transitions: Mapping[tuple[State, str], Sequence[tuple[State, Fraction]]],
        entry_rewards: Mapping[State, float],
        gamma: float = 1.0,
    ):
        self.states = tuple(states)
        self.terminals = tuple(terminals)
        self.actions = {s: tuple(a) for s, a in actions.items()}
        self.transitions = {
            key: tuple((d, Fraction(p)) for d, p in dist)
            for key, dist in transitions.items()
        }
        self.entry_rewards = dict(entry_rewards)
        self.gamma = gamma
        self._terminal_set = set(self.terminals)
        self._validate()

    def _validate(self):
        if not 0 < self.gamma <= 1:
            raise DomainError(f"gamma must be in (0, 1], got {self.gamma}")
        known = set(self.states) | self._terminal_set
        if set(self.states) & self._terminal_set:
            raise ValidationError("a state cannot be both terminal and non-terminal")
        for s in self.states:
            if not self.actions.get(s):
                raise ValidationError(f"non-terminal state {s!r} has no actions")
            for a in self.actions[s]:
                dist = self.transitions.get((s, a))
                if not dist:
                    raise ValidationError(f"no transition row for ({s!r}, {a!r})")
                total = sum((p for _, p in dist), Fraction(0))
                if total != 1:
                    raise ValidationError(
                        f"transition row for ({s!r}, {a!r}) sums to {total}, not 1"
                    )
                for d, p in dist:
                    if p < 0:
                        raise ValidationError(f"negative probability in ({s!r}, {a!r})")
                    if d not in known:
                        raise ValidationError(
                            f"transition from ({s!r}, {a!r}) targets unknown state {d!r}"
                        )
        for key in self.transitions:
            if key[0] in self._terminal_set:
                raise ValidationError(f"terminal state {key[0]!r} has outgoing transitions")
        missing_rewards = known - set(self.entry_rewards)
        if missing_rewards:
            raise ValidationError(f"entry rewards missing for {sorted(map(repr, missing_rewards))}")

    def is_terminal(self, s: State) -> bool:
        return s in self._terminal_set

    def is_acyclic(self) -> bool:
        """Cycle check over the non-terminal reachability graph."""
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {s: WHITE for s in self.states}

        def dfs(root: State) -> bool:
            stack = [(root, iter(self._successors(root)))]
            color[root] = GRAY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color[nxt] == GRAY:
                        return False
                    if color[nxt] == WHITE:
                        color[nxt] = GRAY
                        stack.append((nxt, iter(self._successors(nxt))))
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
            return True

        for s in self.states:
            if color[s] == WHITE and not dfs(s):
                return False
        return True

    def _successors(self, s: State) -> list[State]:
        seen = []
        for a in self.actions[s]:
            for d, p in self.transitions[(s, a)]:
                if p > 0 and d not in self._terminal_set and d not in seen:
                    seen.append(d)
        return seen


@dataclass
class ViResult:
    values: dict[State, float]
    q_values: dict[tuple[State, str], float]
    policy: dict[State, str]
    iterations_to_converge: int
    residual_history: list[float]


def _backup(mdp: FiniteMdp, values: Mapping[State, float]) -> dict[tuple[State, str], float]:
    q: dict[tuple[State, str], float] = {}
    for s in mdp.states:
        for a in mdp.actions[s]:
            total = 0.0
            for d, p in mdp.transitions[(s, a)]:
                contribution = mdp.entry_rewards[d]
                if not mdp.is_terminal(d):
                    contribution += mdp.gamma * values[d]
                total += float(p) * contribution
            q[(s, a)] = total
    return q


def _greedy(mdp: FiniteMdp, q: Mapping[tuple[State, str], float]) -> dict[State, str]:
    # ties break by action declaration order
    policy = {}
    for s in mdp.states:
        best = max(q[(s, a)] for a in mdp.actions[s])
        policy[s] = next(a for a in mdp.actions[s] if q[(s, a)] == best)
    return policy


def value_iteration(mdp: FiniteMdp, tol: float = 1e-9, max_sweeps: int = 10_000) -> ViResult:
    """Iterate Bellman backups to a fixed point.

    Returns the Q table of the final sweep, so ``values[s]`` equals
    ``max_a q_values[(s, a)]`` exactly as computed.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if mdp.gamma == 1.0 and not mdp.is_acyclic():
        raise CyclicUndiscounted(
            "gamma = 1 requires an acyclic MDP; this one has a non-terminal cycle"
        )
    values = {s: 0.0 for s in mdp.states}
    residuals: list[float] = []
    for _ in range(max_sweeps):
        q = _backup(mdp, values)
        new_values = {s: max(q[(s, a)] for a in mdp.actions[s]) for s in mdp.states}
        residual = max(
            (abs(new_values[s] - values[s]) for s in mdp.states), default=0.0
        )
        residuals.append(residual)
        values = new_values
        if residual < tol:
            return ViResult(
                values=values,
                q_values=q,
                policy=_greedy(mdp, q),
                iterations_to_converge=len(residuals),
                residual_history=residuals,
            )
    raise NonConvergence(
        f"value iteration did not reach tol={tol} within {max_sweeps} sweeps"
    )


def extract_policy(mdp: FiniteMdp, values: Mapping[State, float]) -> dict[State, str]:
    """Greedy policy by one-step lookahead on the supplied values."""
    for s in mdp.states:
        if s not in values:
            raise MissingValue(f"no value supplied for state {s!r}")
    return _greedy(mdp, _backup(mdp, values))


def gridworld_to_mdp(grid: GridSpec, gamma: float) -> FiniteMdp:
    """Compile a grid into an exact MDP: rewards on cell entry, terminal cells
    absorb, moves deterministic unless the grid has slip enabled."""
    if not isinstance(grid, GridSpec):
        raise InvalidGrid("expected a GridSpec")
    states = grid.non_terminal_cells()
    terminals = [
        (x, y)
        for y in range(grid.height)
        for x in range(grid.width)
        if grid.cells[(x, y)].terminal
    ]
    actions = {}
    transitions = {}
    for cell in states:
        available = grid.available_actions(cell)
        actions[cell] = available
        for a in available:
            intended = grid.neighbor(cell, a)
            if grid.slip == 0:
                transitions[(cell, a)] = [(intended, Fraction(1))]
                continue
            others = [x for x in available if x != a]
            dist: dict = {}
            keep = Fraction(1) - grid.slip if others else Fraction(1)
            dist[intended] = dist.get(intended, Fraction(0)) + keep
            for other in others:
                dest = grid.neighbor(cell, other)
                share = grid.slip / len(others)
                dist[dest] = dist.get(dest, Fraction(0)) + share
            transitions[(cell, a)] = list(dist.items())
    entry_rewards = {cell: spec.reward for cell, spec in grid.cells.items()}
    return FiniteMdp(states, terminals, actions, transitions, entry_rewards, gamma)


def state_key(state: State) -> str:
    """Serialize tuple state ids the way the file formats expect: "(r,b)"."""
    if isinstance(state, tuple):
        return "(" + ",".join(str(part) for part in state) + ")"
    return str(state)


def vi_result_to_jsonable(mdp: FiniteMdp, result: ViResult) -> dict:
    return {
        "values": {state_key(s): v for s, v in result.values.items()},
        "q_values": {
            f"{state_key(s)}:{a}": v for (s, a), v in result.q_values.items()
        },
        "policy": {state_key(s): a for s, a in result.policy.items()},
        "terminals": {state_key(t): mdp.entry_rewards[t] for t in mdp.terminals},
        "iterations_to_converge": result.iterations_to_converge,
        "residual_history": result.residual_history,
    }
