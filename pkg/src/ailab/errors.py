"""Exception hierarchy shared by every ai-lab module.

All domain failures derive from :class:`AiLabError` so the CLI and the
session service can map them to exit codes / HTTP statuses uniformly.
Each carries a stable ``code`` used in machine-readable error output.
"""

from __future__ import annotations


class AiLabError(Exception):
    """Base class for every domain error raised by this package."""

    code = "error"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


class DomainError(AiLabError):
    """A precondition on an operation's arguments was violated."""

    code = "domain_error"


# -- scenario parsing ------------------------------------------------------

class ScenarioSyntaxError(AiLabError):
    """Malformed scenario text. Carries line/column when known."""

    code = "syntax_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class ValidationError(AiLabError):
    code = "validation_error"


class UnknownReference(ValidationError):
    code = "unknown_reference"


# -- search ----------------------------------------------------------------

class UnknownState(AiLabError):
    code = "unknown_state"


class PredicateError(AiLabError):
    code = "predicate_error"


class EmptyFrontier(AiLabError):
    code = "empty_frontier"


class MissingHeuristic(AiLabError):
    code = "missing_heuristic"


class InvalidGraph(ValidationError):
    code = "invalid_graph"


class UnreachedState(AiLabError):
    code = "unreached_state"


# -- MDP / card game -------------------------------------------------------

class InvalidDeck(ValidationError):
    code = "invalid_deck"


class NonConvergence(AiLabError):
    code = "non_convergence"


class CyclicUndiscounted(AiLabError):
    code = "cyclic_undiscounted"


class MissingValue(AiLabError):
    code = "missing_value"


# -- gridworld / Q-learning ------------------------------------------------

class InvalidGrid(ValidationError):
    code = "invalid_grid"


class UnavailableAction(AiLabError):
    code = "unavailable_action"


class UnknownKey(AiLabError):
    code = "unknown_key"


class MissingRow(AiLabError):
    code = "missing_row"


# -- hidden Markov pursuit game --------------------------------------------

class DimensionMismatch(AiLabError):
    code = "dimension_mismatch"


class ZeroLikelihood(AiLabError):
    code = "zero_likelihood"


class IllegalMove(AiLabError):
    code = "illegal_move"


class GameOver(AiLabError):
    code = "game_over"


class Degeneracy(AiLabError):
    code = "degeneracy"


class TooLarge(AiLabError):
    code = "too_large"


# -- sessions / service ----------------------------------------------------

class UnknownSession(AiLabError):
    code = "unknown_session"


class UnknownRole(AiLabError):
    code = "unknown_role"


class UnsupportedActivity(AiLabError):
    code = "unsupported_activity"


class IllegalAction(AiLabError):
    code = "illegal_action"


class StaleSession(AiLabError):
    code = "stale_session"


class CorruptLog(AiLabError):
    code = "corrupt_log"
