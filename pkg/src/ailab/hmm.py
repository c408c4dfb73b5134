"""Two Spies: hidden-state pursuit on a city map.

A hidden spy walks a Markov chain over cities (dice-expressible transition
rows); after each move it reports a noisy *region* observation. The hunter
keeps a belief -- a normalized probability vector over cities -- updated by the
classic two-step filter (predict through the transition model, correct with
the observation likelihood), plus negative evidence: a failed capture zeroes
the hunter's city.

Three inference routes live here and are kept deliberately independent:

* :func:`filter_step` -- the recursive exact filter used in play,
* :func:`particle_filter_step` -- token-based Monte Carlo approximation with
  systematic resampling,
* :func:`brute_force_posterior` -- enumeration of all hidden paths consistent
  with the evidence, the oracle the other two are judged against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    Degeneracy,
    DimensionMismatch,
    DomainError,
    GameOver,
    IllegalMove,
    TooLarge,
    ValidationError,
    ZeroLikelihood,
)
from .rng import CategoricalSampler, RandomSource, sample_categorical

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class City:
    id: str
    region: str
    neighbors: tuple[str, ...]


class MapSpec:
    """Cities with regions and adjacency, per-city transition rows over cities,
    per-city observation rows over regions, round budget, hunter start."""

    def __init__(
        self,
        cities: list[City],
        transition: dict[str, dict[str, Fraction]],
        observation: dict[str, dict[str, Fraction]],
        rounds: int = 6,
        hunter_start: str | None = None,
        directed: bool = False,
    ):
        self.cities = tuple(cities)
        self.transition = {c: dict(row) for c, row in transition.items()}
        self.observation = {c: dict(row) for c, row in observation.items()}
        self.rounds = rounds
        self.hunter_start = hunter_start
        self.directed = directed
        self._validate()

    @property
    def city_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.cities)

    @property
    def regions(self) -> tuple[str, ...]:
        seen: list[str] = []
        for c in self.cities:
            if c.region not in seen:
                seen.append(c.region)
        return tuple(seen)

    def _validate(self):
        ids = self.city_ids
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate city ids")
        id_set = set(ids)
        for c in self.cities:
            for n in c.neighbors:
                if n not in id_set:
                    raise ValidationError(f"city {c.id!r} lists unknown neighbor {n!r}")
                if n == c.id:
                    raise ValidationError(f"city {c.id!r} lists itself as neighbor")
        if not self.directed:
            by_id = {c.id: c for c in self.cities}
            for c in self.cities:
                for n in c.neighbors:
                    if c.id not in by_id[n].neighbors:
                        raise ValidationError(
                            f"adjacency not symmetric: {c.id!r} -> {n!r} has no reverse"
                        )
        if self.rounds < 1:
            raise ValidationError("rounds must be at least 1")
        if self.hunter_start is not None and self.hunter_start not in id_set:
            raise ValidationError(f"hunter start {self.hunter_start!r} is not a city")
        regions = set(self.regions)
        for c in self.cities:
            row = self.transition.get(c.id)
            if row is None:
                raise ValidationError(f"no transition row for city {c.id!r}")
            allowed = {c.id, *c.neighbors}
            for dest, p in row.items():
                if dest not in allowed and p > 0:
                    raise ValidationError(
                        f"transition row for {c.id!r} assigns mass to non-neighbor {dest!r}"
                    )
                if dest not in id_set:
                    raise ValidationError(
                        f"transition row for {c.id!r} names unknown city {dest!r}"
                    )
            total = sum(row.values(), Fraction(0))
            if total != 1:
                raise ValidationError(
                    f"transition row for city {c.id!r} sums to {total}, not 1"
                )
            obs_row = self.observation.get(c.id)
            if obs_row is None:
                raise ValidationError(f"no observation row for city {c.id!r}")
            for region in obs_row:
                if region not in regions:
                    raise ValidationError(
                        f"observation row for {c.id!r} names unknown region {region!r}"
                    )
            obs_total = sum(obs_row.values(), Fraction(0))
            if obs_total != 1:
                raise ValidationError(
                    f"observation row for city {c.id!r} sums to {obs_total}, not 1"
                )
        extra = set(self.transition) - id_set
        if extra:
            raise ValidationError(f"transition rows for unknown cities {sorted(extra)}")
        extra_obs = set(self.observation) - id_set
        if extra_obs:
            raise ValidationError(f"observation rows for unknown cities {sorted(extra_obs)}")

    def __eq__(self, other):
        return isinstance(other, MapSpec) and (
            self.cities, self.transition, self.observation,
            self.rounds, self.hunter_start, self.directed,
        ) == (
            other.cities, other.transition, other.observation,
            other.rounds, other.hunter_start, other.directed,
        )


class HmmModel:
    """Compiled model: index maps, float matrices for filtering, exact
    rational rows (and precompiled samplers) for simulation."""

    def __init__(self, spec: MapSpec):
        self.spec = spec
        self.city_ids = spec.city_ids
        self.regions = spec.regions
        self.n = len(self.city_ids)
        self._city_index = {c: i for i, c in enumerate(self.city_ids)}
        self._region_index = {r: i for i, r in enumerate(self.regions)}
        self.neighbors = {c.id: c.neighbors for c in spec.cities}
        self.T = np.zeros((self.n, self.n))
        self.O = np.zeros((self.n, len(self.regions)))
        self.T_exact: dict[str, dict[str, Fraction]] = spec.transition
        self.O_exact: dict[str, dict[str, Fraction]] = spec.observation
        for cid, row in spec.transition.items():
            i = self._city_index[cid]
            for dest, p in row.items():
                self.T[i, self._city_index[dest]] = float(p)
        for cid, row in spec.observation.items():
            i = self._city_index[cid]
            for region, p in row.items():
                self.O[i, self._region_index[region]] = float(p)
        # sampler outcome order is canonical (sorted by id) so that draw
        # sequences never depend on scenario-file key order
        self._trans_samplers = {
            cid: CategoricalSampler(sorted((d, p) for d, p in row.items() if p > 0))
            for cid, row in spec.transition.items()
        }
        self._obs_samplers = {
            cid: CategoricalSampler(sorted((r, p) for r, p in row.items() if p > 0))
            for cid, row in spec.observation.items()
        }

    def city_index(self, city: str) -> int:
        if city not in self._city_index:
            raise DomainError(f"unknown city {city!r}")
        return self._city_index[city]

    def region_index(self, region: str) -> int:
        if region not in self._region_index:
            raise DomainError(f"unknown region {region!r}")
        return self._region_index[region]


def build_hmm(spec: MapSpec) -> HmmModel:
    """Assemble transition and sensor matrices from a validated map."""
    return HmmModel(spec)


class Belief:
    """Normalized, non-negative probability vector over cities."""

    __slots__ = ("p",)

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        if p.ndim != 1:
            raise DimensionMismatch("belief must be a vector")
        if np.any(p < 0):
            raise DomainError("belief entries must be non-negative")
        total = p.sum()
        if abs(total - 1.0) > _NORM_TOL:
            raise DomainError(f"belief must sum to 1 within {_NORM_TOL}, got {total!r}")
        self.p = p

    @staticmethod
    def uniform(model: HmmModel) -> "Belief":
        return Belief(np.full(model.n, 1.0 / model.n))

    def as_dict(self, model: HmmModel) -> dict[str, float]:
        return {cid: float(self.p[i]) for i, cid in enumerate(model.city_ids)}

    def __len__(self):
        return len(self.p)


def predict(b: Belief, model: HmmModel) -> Belief:
    """Push the belief through the transition model: b'(j) = sum_i b(i) T(i,j)."""
    if len(b) != model.n:
        raise DimensionMismatch(f"belief has {len(b)} entries for {model.n} cities")
    out = b.p @ model.T
    return Belief(out / out.sum())


def correct(b: Belief, model: HmmModel, obs: str) -> Belief:
    """Reweight by the observation likelihood and renormalize."""
    if len(b) != model.n:
        raise DimensionMismatch(f"belief has {len(b)} entries for {model.n} cities")
    weighted = b.p * model.O[:, model.region_index(obs)]
    total = weighted.sum()
    if total == 0.0:
        raise ZeroLikelihood(
            f"observation {obs!r} is impossible under the current belief"
        )
    return Belief(weighted / total)


def filter_step(
    b: Belief,
    model: HmmModel,
    obs: str,
    failed_capture_at: str | None = None,
) -> Belief:
    """One full round of inference: predict, correct, then (optionally) zero
    the failed-capture city and renormalize."""
    out = correct(predict(b, model), model, obs)
    if failed_capture_at is not None:
        p = out.p.copy()
        p[model.city_index(failed_capture_at)] = 0.0
        total = p.sum()
        if total == 0.0:
            raise ZeroLikelihood(
                f"failed capture at {failed_capture_at!r} empties the belief"
            )
        out = Belief(p / total)
    return out


def spy_step(model: HmmModel, current: str, rs: RandomSource) -> tuple[str, str]:
    """Roll the spy one round: next city from its transition row, then an
    observation from the landing city's sensor row."""
    model.city_index(current)
    nxt = model._trans_samplers[current].sample(rs)
    obs = model._obs_samplers[nxt].sample(rs)
    return nxt, obs


# -- the six-round game ------------------------------------------------------

HUNTER_ACTIONS = ("move", "stay", "capture")


@dataclass
class RoundRecord:
    round: int
    spy_city: str          # hidden side; never shown to the hunter
    observation: str
    hunter_action: dict
    hunter_city: str       # hunter's position after the action
    capture_result: bool | None  # None when no capture was attempted

    def hunter_facing(self) -> dict:
        return {
            "round": self.round,
            "observation": self.observation,
            "hunter_action": self.hunter_action,
            "hunter_city": self.hunter_city,
            "capture_result": self.capture_result,
        }

    def full(self) -> dict:
        return {"spy_city": self.spy_city, **self.hunter_facing()}


@dataclass
class TwoSpiesState:
    rounds_total: int
    spy_city: str
    hunter_city: str
    round: int = 0
    status: str = "running"  # running | captured | evaded
    history: list[RoundRecord] = field(default_factory=list)
    belief: Belief | None = None


def new_game(spec: MapSpec, model: HmmModel, rs: RandomSource) -> TwoSpiesState:
    """Start a game: the spy's hidden start is drawn uniformly (matching the
    hunter's uniform prior) and the hunter stands at the map's start city."""
    ids = model.city_ids
    spy_city = sample_categorical(rs, [(c, Fraction(1, len(ids))) for c in ids])
    hunter_city = spec.hunter_start if spec.hunter_start is not None else ids[0]
    return TwoSpiesState(
        rounds_total=spec.rounds,
        spy_city=spy_city,
        hunter_city=hunter_city,
        belief=Belief.uniform(model),
    )


def hunter_apply(
    game: TwoSpiesState,
    action: dict,
    model: HmmModel,
    rs: RandomSource,
) -> TwoSpiesState:
    """Play one round: the spy transitions and reports, then the hunter acts.

    Capture succeeds iff the hunter's city equals the spy's (post-transition)
    city; a failed capture burns the round and zeroes that city in the belief.
    """
    if game.status != "running":
        raise GameOver(f"game already {game.status}")
    kind = action.get("type")
    if kind not in HUNTER_ACTIONS:
        raise IllegalMove(f"unknown hunter action {kind!r}")
    if kind == "move":
        target = action.get("to")
        if target not in model.neighbors.get(game.hunter_city, ()):
            raise IllegalMove(
                f"{target!r} is not adjacent to {game.hunter_city!r}"
            )
    spy_next, obs = spy_step(model, game.spy_city, rs)
    game.spy_city = spy_next
    game.round += 1
    capture_result: bool | None = None
    failed_capture_at: str | None = None
    if kind == "move":
        game.hunter_city = action["to"]
    elif kind == "capture":
        capture_result = game.hunter_city == game.spy_city
        if capture_result:
            game.status = "captured"
        else:
            failed_capture_at = game.hunter_city
    game.history.append(
        RoundRecord(
            round=game.round,
            spy_city=spy_next,
            observation=obs,
            hunter_action=dict(action),
            hunter_city=game.hunter_city,
            capture_result=capture_result,
        )
    )
    if game.status == "running":
        game.belief = filter_step(game.belief, model, obs, failed_capture_at)
        if game.round >= game.rounds_total:
            game.status = "evaded"
    return game


def evidence_from_history(history: list[RoundRecord]) -> tuple[list[str], list[str | None]]:
    """Observation and failed-capture sequences a filter or oracle can consume."""
    observations = [rec.observation for rec in history]
    failed = [
        rec.hunter_city if rec.capture_result is False else None for rec in history
    ]
    return observations, failed


# -- particle filter ---------------------------------------------------------

def particle_filter_step(
    particles: list[str],
    model: HmmModel,
    obs: str,
    failed_capture_at: str | None,
    rs: RandomSource,
) -> list[str]:
    """Move every particle through the transition model, weight by the
    observation likelihood (zeroing a failed-capture city), then systematically
    resample back to the original count with a single uniform draw."""
    if not particles:
        raise DomainError("need at least one particle")
    moved = [model._trans_samplers[p].sample(rs) for p in particles]
    obs_idx = model.region_index(obs)
    weights = np.array([model.O[model.city_index(c), obs_idx] for c in moved])
    if failed_capture_at is not None:
        model.city_index(failed_capture_at)
        weights = weights * np.array(
            [0.0 if c == failed_capture_at else 1.0 for c in moved]
        )
    total = weights.sum()
    if total == 0.0:
        raise Degeneracy("all particle weights are zero")
    cumulative = np.cumsum(weights / total)
    n = len(moved)
    u = rs.unit()
    positions = (np.arange(n) + u) / n
    indices = np.searchsorted(cumulative, positions, side="right")
    indices = np.minimum(indices, n - 1)
    return [moved[i] for i in indices]


def initial_particles(model: HmmModel, n: int, rs: RandomSource) -> list[str]:
    """Uniform particle cloud over the cities."""
    if n < 1:
        raise DomainError("need at least one particle")
    dist = [(c, Fraction(1, model.n)) for c in model.city_ids]
    sampler = CategoricalSampler(dist)
    return [sampler.sample(rs) for _ in range(n)]


def particle_frequencies(particles: list[str], model: HmmModel) -> dict[str, float]:
    counts = {c: 0 for c in model.city_ids}
    for p in particles:
        counts[p] += 1
    n = len(particles)
    return {c: counts[c] / n for c in model.city_ids}


def run_particle_filter(
    model: HmmModel,
    observations: list[str],
    failed_captures: list[str | None] | None,
    n_particles: int,
    rs: RandomSource,
) -> list[dict[str, float]]:
    """Per-round particle frequency estimates for a recorded trace."""
    failed = failed_captures or [None] * len(observations)
    if len(failed) != len(observations):
        raise DimensionMismatch("failed-capture list must match observations")
    particles = initial_particles(model, n_particles, rs)
    out = []
    for obs, captured_at in zip(observations, failed):
        particles = particle_filter_step(particles, model, obs, captured_at, rs)
        out.append(particle_frequencies(particles, model))
    return out


# -- brute-force oracle ------------------------------------------------------

def brute_force_posterior(
    model: HmmModel,
    observations: list[str],
    failed_captures: list[str | None] | None = None,
    initial: Belief | None = None,
) -> list[Belief]:
    """Exact per-round posteriors by enumerating every hidden path.

    Walks the transition support depth-first, accumulating the probability of
    each evidence-consistent prefix by its endpoint; round k's posterior is
    the normalized accumulation at depth k. Independent of the recursive
    filter by construction.
    """
    rounds = len(observations)
    if model.n ** max(rounds, 1) > 10**7:
        raise TooLarge("path enumeration over this map/round count is infeasible")
    failed = failed_captures or [None] * rounds
    if len(failed) != rounds:
        raise DimensionMismatch("failed-capture list must match observations")
    prior = initial if initial is not None else Belief.uniform(model)
    obs_idx = [model.region_index(o) for o in observations]
    banned_idx = [
        model.city_index(c) if c is not None else None for c in failed
    ]
    accum = [np.zeros(model.n) for _ in range(rounds)]

    def walk(city: int, weight: float, depth: int):
        if depth == rounds:
            return
        for dest_id, p in model.T_exact[model.city_ids[city]].items():
            if p == 0:
                continue
            dest = model.city_index(dest_id)
            if banned_idx[depth] is not None and dest == banned_idx[depth]:
                continue
            w = weight * float(p) * model.O[dest, obs_idx[depth]]
            if w == 0.0:
                continue
            accum[depth][dest] += w
            walk(dest, w, depth + 1)

    for start in range(model.n):
        if prior.p[start] > 0:
            walk(start, float(prior.p[start]), 0)
    posteriors = []
    for depth in range(rounds):
        total = accum[depth].sum()
        if total == 0.0:
            raise ZeroLikelihood(f"evidence through round {depth + 1} has zero probability")
        posteriors.append(Belief(accum[depth] / total))
    return posteriors


def total_variation(a: Belief | dict[str, float], b: Belief | dict[str, float], model: HmmModel) -> float:
    """TV distance between two distributions over the model's cities."""

    def vec(x):
        if isinstance(x, Belief):
            return x.p
        return np.array([x[c] for c in model.city_ids])

    return 0.5 * float(np.abs(vec(a) - vec(b)).sum())


# -- scenario body (kind "map") ----------------------------------------------

def map_from_body(body: dict) -> MapSpec:
    from .scenario import body_field, parse_probability, require_keys

    require_keys(
        body,
        {"cities", "transition", "observation"},
        optional={"rounds", "hunter_start", "directed"},
    )
    cities = [
        City(c["id"], c["region"], tuple(c.get("neighbors", ())))
        for c in body_field(body, "cities", list)
    ]
    transition = {
        city: {dest: parse_probability(p) for dest, p in row.items()}
        for city, row in body_field(body, "transition", dict).items()
    }
    observation = {
        city: {region: parse_probability(p) for region, p in row.items()}
        for city, row in body_field(body, "observation", dict).items()
    }
    return MapSpec(
        cities=cities,
        transition=transition,
        observation=observation,
        rounds=int(body.get("rounds", 6)),
        hunter_start=body.get("hunter_start"),
        directed=bool(body.get("directed", False)),
    )


def map_to_body(spec: MapSpec) -> dict:
    from .scenario import format_probability

    body = {
        "cities": [
            {"id": c.id, "region": c.region, "neighbors": list(c.neighbors)}
            for c in spec.cities
        ],
        "transition": {
            city: {dest: format_probability(p) for dest, p in row.items()}
            for city, row in spec.transition.items()
        },
        "observation": {
            city: {region: format_probability(p) for region, p in row.items()}
            for city, row in spec.observation.items()
        },
        "rounds": spec.rounds,
    }
    if spec.hunter_start is not None:
        body["hunter_start"] = spec.hunter_start
    if spec.directed:
        body["directed"] = True
    return body
