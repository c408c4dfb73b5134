"""Red and Black Jack: deck configs, the compiled MDP, and Monte Carlo play.

The hit deck holds red cards, black cards, and face cards; drawing a face
busts. Standing draws one card from the stand deck and ends the game. The
decision state is the pair (r, b) of red/black cards drawn so far, and the
final score depends only on the largest single-color count in the hand, so the
whole game compiles to a small exact MDP.

The full-hand state is the one genuinely ambiguous spot and is resolved by
``jackpot_rule``:

* ``hit_on_empty_deck`` (default): the full hand stays a decision state; a Hit
  there, with only face cards left, pays the jackpot rather than busting.
* ``auto_on_full_hand``: drawing the last non-face card ends the game with the
  jackpot immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import DomainError, InvalidDeck
from .mdp import FiniteMdp, ViResult, state_key, value_iteration
from .rng import RandomSource, dice_roll, sample_categorical

JACKPOT_RULES = ("hit_on_empty_deck", "auto_on_full_hand")

HIT, STAND = "Hit", "Stand"
BUST, JACKPOT = "Bust", "Jackpot"

_COUNT_NAMES = {1: "Single", 2: "Double", 3: "Triple"}


def terminal_for_count(count: int) -> str:
    """Terminal id for a stand outcome with this max single-color count."""
    return _COUNT_NAMES.get(count, f"Max{count}")


@dataclass(frozen=True)
class ScoreTable:
    bust: float = -5.0
    by_max_count: tuple[tuple[int, float], ...] = ((1, 1.0), (2, 5.0), (3, 15.0))
    jackpot: float = 30.0

    def count_scores(self) -> dict[int, float]:
        return dict(self.by_max_count)


@dataclass(frozen=True)
class DeckCounts:
    red: int
    black: int
    face: int = 0


@dataclass(frozen=True)
class DeckConfig:
    hit_deck: DeckCounts = DeckCounts(red=2, black=2, face=1)
    stand_deck: DeckCounts = DeckCounts(red=1, black=1)
    scores: ScoreTable = field(default_factory=ScoreTable)
    jackpot_rule: str = "hit_on_empty_deck"

    def __post_init__(self):
        if self.hit_deck.face < 1:
            raise InvalidDeck("hit deck needs at least one face card")
        if self.hit_deck.red < 1 or self.hit_deck.black < 1:
            raise InvalidDeck("hit deck needs at least one card of each color")
        if self.stand_deck.red + self.stand_deck.black < 1:
            raise InvalidDeck("stand deck must not be empty")
        if self.stand_deck.red < 0 or self.stand_deck.black < 0 or self.stand_deck.face != 0:
            raise InvalidDeck("stand deck holds non-negative red/black counts only")
        if self.jackpot_rule not in JACKPOT_RULES:
            raise InvalidDeck(f"unknown jackpot rule {self.jackpot_rule!r}")
        missing = self.achievable_max_counts() - set(self.scores.count_scores())
        if missing:
            raise InvalidDeck(
                f"score table lacks entries for achievable max counts {sorted(missing)}"
            )

    def achievable_max_counts(self) -> set[int]:
        """Every max(r', b') a stand draw can produce from any decision state."""
        counts = set()
        for r in range(self.hit_deck.red + 1):
            for b in range(self.hit_deck.black + 1):
                if not self.is_decision_state((r, b)):
                    continue
                if self.stand_deck.red > 0:
                    counts.add(max(r + 1, b))
                if self.stand_deck.black > 0:
                    counts.add(max(r, b + 1))
        return counts

    def is_decision_state(self, state: tuple[int, int]) -> bool:
        full = state == (self.hit_deck.red, self.hit_deck.black)
        return not (full and self.jackpot_rule == "auto_on_full_hand")

    def decision_states(self) -> list[tuple[int, int]]:
        return [
            (r, b)
            for r in range(self.hit_deck.red + 1)
            for b in range(self.hit_deck.black + 1)
            if self.is_decision_state((r, b))
        ]

    def hit_distribution(self, state: tuple[int, int]) -> list[tuple[object, Fraction]]:
        """Outcomes of a Hit from ``state``: successor pair or terminal id."""
        r, b = state
        red_left = self.hit_deck.red - r
        black_left = self.hit_deck.black - b
        faces = self.hit_deck.face
        if red_left == 0 and black_left == 0:
            # only face cards remain: the whole deck was cleared of colors
            return [(JACKPOT, Fraction(1))]
        n = red_left + black_left + faces
        dist: list[tuple[object, Fraction]] = []
        if red_left:
            dest = (r + 1, b)
            dist.append((dest if self.is_decision_state(dest) else JACKPOT, Fraction(red_left, n)))
        if black_left:
            dest = (r, b + 1)
            dist.append((dest if self.is_decision_state(dest) else JACKPOT, Fraction(black_left, n)))
        dist.append((BUST, Fraction(faces, n)))
        return dist

    def stand_distribution(self, state: tuple[int, int]) -> list[tuple[str, Fraction]]:
        r, b = state
        total = self.stand_deck.red + self.stand_deck.black
        dist = []
        if self.stand_deck.red:
            dist.append(
                (terminal_for_count(max(r + 1, b)), Fraction(self.stand_deck.red, total))
            )
        if self.stand_deck.black:
            dist.append(
                (terminal_for_count(max(r, b + 1)), Fraction(self.stand_deck.black, total))
            )
        return _merge(dist)

    def terminal_reward(self, terminal: str) -> float:
        if terminal == BUST:
            return self.scores.bust
        if terminal == JACKPOT:
            return self.scores.jackpot
        for count, score in self.scores.by_max_count:
            if terminal_for_count(count) == terminal:
                return score
        raise InvalidDeck(f"no score for terminal {terminal!r}")


def _merge(dist: list[tuple[str, Fraction]]) -> list[tuple[str, Fraction]]:
    merged: dict[str, Fraction] = {}
    for dest, p in dist:
        merged[dest] = merged.get(dest, Fraction(0)) + p
    return list(merged.items())


def build_rbj_mdp(deck: DeckConfig, gamma: float = 1.0) -> FiniteMdp:
    """Compile a deck config into the exact card-count MDP.

    Declaration order puts Hit before Stand, which is also the documented
    value-iteration tie-break.
    """
    states = deck.decision_states()
    transitions = {}
    reachable_terminals: list[str] = []

    def note_terminal(t: str):
        if t not in reachable_terminals:
            reachable_terminals.append(t)

    actions = {}
    for s in states:
        actions[s] = (HIT, STAND)
        hit = deck.hit_distribution(s)
        stand = deck.stand_distribution(s)
        transitions[(s, HIT)] = hit
        transitions[(s, STAND)] = stand
        for dest, _ in list(hit) + list(stand):
            if isinstance(dest, str):
                note_terminal(dest)
    terminal_order = [BUST]
    for count in sorted(deck.achievable_max_counts()):
        name = terminal_for_count(count)
        if name in reachable_terminals:
            terminal_order.append(name)
    if JACKPOT in reachable_terminals:
        terminal_order.append(JACKPOT)
    entry_rewards = {s: 0.0 for s in states}
    entry_rewards.update({t: deck.terminal_reward(t) for t in terminal_order})
    return FiniteMdp(
        states=states,
        terminals=terminal_order,
        actions=actions,
        transitions=transitions,
        entry_rewards=entry_rewards,
        gamma=gamma,
    )


@dataclass
class GameOutcome:
    terminal: str
    score: float
    log: list[dict]

    def to_dict(self) -> dict:
        return {"terminal": self.terminal, "score": self.score, "log": self.log}


class RbjGame:
    """One playable game; draws consume the caller's RandomSource."""

    def __init__(self, deck: DeckConfig, rs: RandomSource):
        self.deck = deck
        self.rs = rs
        self.state: tuple[int, int] = (0, 0)
        self.terminal: str | None = None
        self.log: list[dict] = []

    @property
    def running(self) -> bool:
        return self.terminal is None

    def legal_actions(self) -> tuple[str, ...]:
        return (HIT, STAND) if self.running else ()

    def remaining_hit_deck(self) -> dict[str, int]:
        r, b = self.state
        return {
            "red": self.deck.hit_deck.red - r,
            "black": self.deck.hit_deck.black - b,
            "face": self.deck.hit_deck.face,
        }

    def _finish(self, terminal: str):
        self.terminal = terminal

    def apply(self, action: str) -> dict:
        if not self.running:
            raise DomainError("game already finished")
        if action not in (HIT, STAND):
            raise DomainError(f"unknown action {action!r}")
        before = self.state
        if action == HIT:
            remaining = self.remaining_hit_deck()
            if remaining["red"] == 0 and remaining["black"] == 0:
                # only face cards left: every non-face card was drawn already
                entry = {"action": HIT, "state": list(before), "card": "face", "result": JACKPOT}
                self._finish(JACKPOT)
            else:
                card = self._draw_hit_card(before)
                entry = {"action": HIT, "state": list(before), "card": card}
                if card == "face":
                    entry["result"] = BUST
                    self._finish(BUST)
                else:
                    nxt = (before[0] + 1, before[1]) if card == "red" else (before[0], before[1] + 1)
                    if self.deck.is_decision_state(nxt):
                        entry["result"] = list(nxt)
                        self.state = nxt
                    else:
                        entry["result"] = JACKPOT
                        self._finish(JACKPOT)
        else:
            card = self._draw_stand_card()
            r, b = before
            final = (r + 1, b) if card == "red" else (r, b + 1)
            terminal = terminal_for_count(max(final))
            entry = {"action": STAND, "state": list(before), "card": card, "result": terminal}
            self._finish(terminal)
        self.log.append(entry)
        return entry

    def _draw_hit_card(self, state: tuple[int, int]) -> str:
        r, b = state
        red_left = self.deck.hit_deck.red - r
        black_left = self.deck.hit_deck.black - b
        faces = self.deck.hit_deck.face
        n = red_left + black_left + faces
        dist = [
            (color, Fraction(count, n))
            for color, count in (("red", red_left), ("black", black_left), ("face", faces))
            if count
        ]
        return sample_categorical(self.rs, dist)

    def _draw_stand_card(self) -> str:
        total = self.deck.stand_deck.red + self.deck.stand_deck.black
        dist = [
            (color, Fraction(count, total))
            for color, count in (("red", self.deck.stand_deck.red), ("black", self.deck.stand_deck.black))
            if count
        ]
        return sample_categorical(self.rs, dist)

    def outcome(self) -> GameOutcome:
        if self.running:
            raise DomainError("game still running")
        return GameOutcome(
            terminal=self.terminal,
            score=self.deck.terminal_reward(self.terminal),
            log=self.log,
        )


def simulate_rbj_game(deck: DeckConfig, chooser, rs: RandomSource) -> GameOutcome:
    """Play one game to completion.

    ``chooser`` maps (state, legal actions) to an action; see
    :func:`policy_chooser` and :func:`scripted_chooser`.
    """
    game = RbjGame(deck, rs)
    while game.running:
        action = chooser(game.state, game.legal_actions())
        game.apply(action)
    return game.outcome()


def policy_chooser(policy: dict):
    def choose(state, _legal):
        return policy[state]

    return choose


def scripted_chooser(actions: list[str]):
    script = iter(actions)

    def choose(_state, _legal):
        return next(script)

    return choose


def random_chooser(rs: RandomSource):
    """Uniform over legal actions; used to visit every (state, action) pair."""

    def choose(_state, legal):
        return legal[dice_roll(rs, len(legal)) - 1]

    return choose


def estimate_transitions(
    deck: DeckConfig, n_games: int, rs: RandomSource
) -> dict[tuple[tuple[int, int], str], dict]:
    """Empirical successor frequencies from repeated exploratory play.

    States never visited are simply absent. Destinations are decision-state
    pairs or terminal ids, mirroring the analytic MDP rows.
    """
    if n_games < 1:
        raise DomainError("need at least one game")
    counts: dict[tuple, dict] = {}
    chooser = random_chooser(rs)
    for _ in range(n_games):
        game = RbjGame(deck, rs)
        while game.running:
            state = game.state
            action = chooser(state, game.legal_actions())
            entry = game.apply(action)
            result = entry["result"]
            dest = tuple(result) if isinstance(result, list) else result
            bucket = counts.setdefault((state, action), {})
            bucket[dest] = bucket.get(dest, 0) + 1
    freqs = {}
    for key, bucket in counts.items():
        total = sum(bucket.values())
        freqs[key] = {dest: n / total for dest, n in bucket.items()}
    return freqs


def apply_edits(deck: DeckConfig, edits: dict[str, object]) -> DeckConfig:
    """Apply dotted-path edits such as ``scores.jackpot=300`` or
    ``hit_deck.red=3``; ``scores.by_max_count.4=40`` adds/overrides a count."""
    hit = deck.hit_deck
    stand = deck.stand_deck
    scores = deck.scores
    rule = deck.jackpot_rule
    count_scores = scores.count_scores()
    bust, jackpot = scores.bust, scores.jackpot
    for path, value in edits.items():
        parts = path.split(".")
        if parts[0] == "hit_deck" and len(parts) == 2 and parts[1] in ("red", "black", "face"):
            hit = replace(hit, **{parts[1]: int(value)})
        elif parts[0] == "stand_deck" and len(parts) == 2 and parts[1] in ("red", "black"):
            stand = replace(stand, **{parts[1]: int(value)})
        elif path == "scores.bust":
            bust = float(value)
        elif path == "scores.jackpot":
            jackpot = float(value)
        elif parts[:2] == ["scores", "by_max_count"] and len(parts) == 3:
            count_scores[int(parts[2])] = float(value)
        elif path == "jackpot_rule":
            rule = str(value)
        else:
            raise DomainError(f"unknown edit path {path!r}")
    new_scores = ScoreTable(
        bust=bust,
        by_max_count=tuple(sorted(count_scores.items())),
        jackpot=jackpot,
    )
    return DeckConfig(hit_deck=hit, stand_deck=stand, scores=new_scores, jackpot_rule=rule)


@dataclass
class PerturbResult:
    baseline: tuple[FiniteMdp, ViResult]
    edited: tuple[FiniteMdp, ViResult]
    policy_changes: dict[tuple[int, int], tuple[str, str]]
    value_deltas: dict[tuple[int, int], float]

    def to_dict(self) -> dict:
        return {
            "policy_changes": {
                state_key(s): list(change) for s, change in self.policy_changes.items()
            },
            "value_deltas": {state_key(s): d for s, d in self.value_deltas.items()},
        }


def perturb_and_resolve(
    deck: DeckConfig, edits: dict[str, object], gamma: float = 1.0
) -> PerturbResult:
    """Solve the baseline and an edited config, with a structured diff."""
    base_mdp = build_rbj_mdp(deck, gamma)
    base_vi = value_iteration(base_mdp)
    edited_deck = apply_edits(deck, edits)
    new_mdp = build_rbj_mdp(edited_deck, gamma)
    new_vi = value_iteration(new_mdp)
    shared = [s for s in base_mdp.states if s in set(new_mdp.states)]
    policy_changes = {
        s: (base_vi.policy[s], new_vi.policy[s])
        for s in shared
        if base_vi.policy[s] != new_vi.policy[s]
    }
    value_deltas = {s: new_vi.values[s] - base_vi.values[s] for s in shared}
    return PerturbResult(
        baseline=(base_mdp, base_vi),
        edited=(new_mdp, new_vi),
        policy_changes=policy_changes,
        value_deltas=value_deltas,
    )


def strict_action_states(mdp: FiniteMdp, vi: ViResult, action: str) -> set:
    """States where ``action`` is strictly better than every alternative."""
    out = set()
    for s in mdp.states:
        mine = vi.q_values[(s, action)]
        if all(vi.q_values[(s, a)] < mine for a in mdp.actions[s] if a != action):
            out.add(s)
    return out


# -- scenario body (kind "deck") ---------------------------------------------

def deck_from_body(body: dict) -> DeckConfig:
    from .scenario import require_keys

    require_keys(
        body,
        set(),
        optional={"hit_deck", "stand_deck", "scores", "jackpot_rule"},
    )
    defaults = DeckConfig()
    hit = body.get("hit_deck", {})
    stand = body.get("stand_deck", {})
    scores_body = body.get("scores", {})
    by_max = scores_body.get("by_max_count")
    if by_max is not None:
        by_max_counts = tuple(sorted((int(k), float(v)) for k, v in by_max.items()))
    else:
        by_max_counts = defaults.scores.by_max_count
    scores = ScoreTable(
        bust=float(scores_body.get("bust", defaults.scores.bust)),
        by_max_count=by_max_counts,
        jackpot=float(scores_body.get("jackpot", defaults.scores.jackpot)),
    )
    return DeckConfig(
        hit_deck=DeckCounts(
            red=int(hit.get("red", defaults.hit_deck.red)),
            black=int(hit.get("black", defaults.hit_deck.black)),
            face=int(hit.get("face", defaults.hit_deck.face)),
        ),
        stand_deck=DeckCounts(
            red=int(stand.get("red", defaults.stand_deck.red)),
            black=int(stand.get("black", defaults.stand_deck.black)),
        ),
        scores=scores,
        jackpot_rule=body.get("jackpot_rule", defaults.jackpot_rule),
    )


def deck_to_body(deck: DeckConfig) -> dict:
    return {
        "hit_deck": {
            "red": deck.hit_deck.red,
            "black": deck.hit_deck.black,
            "face": deck.hit_deck.face,
        },
        "stand_deck": {"red": deck.stand_deck.red, "black": deck.stand_deck.black},
        "scores": {
            "bust": deck.scores.bust,
            "by_max_count": {str(k): v for k, v in deck.scores.by_max_count},
            "jackpot": deck.scores.jackpot,
        },
        "jackpot_rule": deck.jackpot_rule,
    }
