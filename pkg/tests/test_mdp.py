from __future__ import annotations

from fractions import Fraction

import pytest

from ailab.errors import (
    CyclicUndiscounted,
    DomainError,
    MissingValue,
    NonConvergence,
    ValidationError,
)
from ailab.mdp import (
    FiniteMdp,
    extract_policy,
    gridworld_to_mdp,
    state_key,
    value_iteration,
)

from oracles import grid_optimal_actions


def single_step_mdp(reward: float, gamma: float = 1.0) -> FiniteMdp:
    return FiniteMdp(
        states=["s"],
        terminals=["end"],
        actions={"s": ("go",)},
        transitions={("s", "go"): [("end", Fraction(1))]},
        entry_rewards={"s": 0.0, "end": reward},
        gamma=gamma,
    )


def test_single_state_value_equals_terminal_reward():
    vi = value_iteration(single_step_mdp(7.5))
    assert vi.values["s"] == 7.5


def test_terminal_reward_not_discounted():
    vi = value_iteration(single_step_mdp(10.0, gamma=0.5))
    assert vi.values["s"] == 10.0


def test_transition_rows_must_sum_to_one():
    with pytest.raises(ValidationError):
        FiniteMdp(
            states=["s"],
            terminals=["end"],
            actions={"s": ("go",)},
            transitions={("s", "go"): [("end", Fraction(5, 6))]},
            entry_rewards={"s": 0.0, "end": 1.0},
        )


def test_terminals_cannot_have_transitions():
    with pytest.raises(ValidationError):
        FiniteMdp(
            states=["s"],
            terminals=["end"],
            actions={"s": ("go",)},
            transitions={
                ("s", "go"): [("end", Fraction(1))],
                ("end", "go"): [("s", Fraction(1))],
            },
            entry_rewards={"s": 0.0, "end": 1.0},
        )


def cyclic_mdp(gamma: float) -> FiniteMdp:
    return FiniteMdp(
        states=["a", "b"],
        terminals=["end"],
        actions={"a": ("go",), "b": ("go", "quit")},
        transitions={
            ("a", "go"): [("b", Fraction(1))],
            ("b", "go"): [("a", Fraction(1))],
            ("b", "quit"): [("end", Fraction(1))],
        },
        entry_rewards={"a": 0.0, "b": 0.0, "end": 4.0},
        gamma=gamma,
    )


def test_cyclic_undiscounted_rejected():
    with pytest.raises(CyclicUndiscounted):
        value_iteration(cyclic_mdp(1.0))


def test_cyclic_discounted_converges():
    vi = value_iteration(cyclic_mdp(0.9), tol=1e-12)
    assert vi.values["b"] == pytest.approx(4.0)
    assert vi.values["a"] == pytest.approx(3.6)


def test_non_convergence_reported():
    # rewarding cycle: values approach 1/(1-gamma) geometrically, so three
    # sweeps cannot reach a 1e-15 residual
    slow = FiniteMdp(
        states=["a", "b"],
        terminals=[],
        actions={"a": ("go",), "b": ("go",)},
        transitions={
            ("a", "go"): [("b", Fraction(1))],
            ("b", "go"): [("a", Fraction(1))],
        },
        entry_rewards={"a": 1.0, "b": 1.0},
        gamma=0.9,
    )
    with pytest.raises(NonConvergence):
        value_iteration(slow, tol=1e-15, max_sweeps=3)


def test_values_equal_max_q_exactly():
    vi = value_iteration(cyclic_mdp(0.9))
    mdp = cyclic_mdp(0.9)
    for s in mdp.states:
        assert vi.values[s] == max(vi.q_values[(s, a)] for a in mdp.actions[s])


def test_extract_policy_tie_breaks_by_declaration_order():
    mdp = FiniteMdp(
        states=["s"],
        terminals=["end"],
        actions={"s": ("left", "right")},
        transitions={
            ("s", "left"): [("end", Fraction(1))],
            ("s", "right"): [("end", Fraction(1))],
        },
        entry_rewards={"s": 0.0, "end": 1.0},
    )
    assert extract_policy(mdp, {"s": 0.0}) == {"s": "left"}


def test_extract_policy_single_action_everywhere():
    mdp = single_step_mdp(3.0)
    assert extract_policy(mdp, {"s": 0.0}) == {"s": "go"}


def test_extract_policy_missing_value():
    with pytest.raises(MissingValue):
        extract_policy(single_step_mdp(1.0), {})


def test_tolerance_must_be_positive():
    with pytest.raises(DomainError):
        value_iteration(single_step_mdp(1.0), tol=0.0)


# -- gridworld compilation ----------------------------------------------------

def test_one_step_grid_value(grid3):
    from ailab.qmaze import CellSpec, GridSpec

    grid = GridSpec(
        width=2,
        height=1,
        start=(0, 0),
        cells={(0, 0): CellSpec(0.0), (1, 0): CellSpec(10.0, terminal=True)},
    )
    mdp = gridworld_to_mdp(grid, 0.9)
    vi = value_iteration(mdp)
    assert vi.values[(0, 0)] == 10.0


def test_all_zero_rewards_give_zero_values(grid3):
    from ailab.qmaze import CellSpec, GridSpec

    grid = GridSpec(
        width=2,
        height=2,
        start=(0, 0),
        cells={
            (0, 0): CellSpec(0.0),
            (1, 0): CellSpec(0.0),
            (0, 1): CellSpec(0.0),
            (1, 1): CellSpec(0.0, terminal=True),
        },
    )
    vi = value_iteration(gridworld_to_mdp(grid, 0.9), tol=1e-12)
    assert all(v == 0.0 for v in vi.values.values())


def test_grid3x3_policy_matches_policy_enumeration_oracle(grid3):
    mdp = gridworld_to_mdp(grid3, 0.9)
    vi = value_iteration(mdp, tol=1e-12)
    oracle = grid_optimal_actions(grid3, 0.9)
    for cell in mdp.states:
        assert vi.policy[cell] in oracle["actions"][cell], cell
        assert vi.values[cell] == pytest.approx(oracle["values"][cell], abs=1e-8)


def test_grid_slip_distributes_probability():
    from ailab.qmaze import CellSpec, GridSpec

    grid = GridSpec(
        width=3,
        height=1,
        start=(0, 0),
        cells={
            (0, 0): CellSpec(0.0),
            (1, 0): CellSpec(0.0),
            (2, 0): CellSpec(5.0, terminal=True),
        },
        slip=Fraction(1, 6),
    )
    mdp = gridworld_to_mdp(grid, 0.9)
    row = dict(mdp.transitions[((1, 0), "E")])
    assert row[(2, 0)] == Fraction(5, 6)
    assert row[(0, 0)] == Fraction(1, 6)
    # single-exit cells cannot slip
    only_exit = dict(mdp.transitions[((0, 0), "E")])
    assert only_exit[(1, 0)] == Fraction(1)


def test_state_key_serialization():
    assert state_key((1, 2)) == "(1,2)"
    assert state_key("Bust") == "Bust"
