"""Deterministic random source and the dice primitives built on it.

Every stochastic operation in this package draws from a :class:`RandomSource`,
a splitmix64 generator implemented in pure integer arithmetic so that equal
seeds produce equal sequences on every platform and interpreter. The generator
algorithm is part of the scenario file contract: envelope version "1" means
splitmix64 streams, and replays depend on it.

Two sampling primitives are exposed:

* :func:`dice_roll` -- one uniform draw from a ``faces``-sided die.
* :func:`sample_categorical` -- one draw from a distribution given as exact
  rationals, resolved against cumulative thresholds so a sample costs exactly
  one generator step (one logical dice roll).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, TypeVar

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Identifier recorded in file formats; bump if the algorithm ever changes.
GENERATOR_NAME = "splitmix64"

#: Die sizes the scenario validator treats as physically enactable.
SUPPORTED_DICE = (2, 4, 6, 8, 10, 12, 20)

T = TypeVar("T")


def _mix(z: int) -> int:
    """splitmix64 output scrambler (Vigna's reference constants)."""
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class RandomSource:
    """Seedable splitmix64 stream. Single-owner: never share across activities.

    ``position`` counts draws taken, so a stream can be checkpointed and
    compared during replay.
    """

    __slots__ = ("seed", "_state", "position")

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._state = seed
        self.position = 0

    def next_u64(self) -> int:
        """Advance one step and return a uniform 64-bit unsigned integer."""
        self._state = (self._state + _GOLDEN) & _MASK64
        self.position += 1
        return _mix(self._state)

    def unit(self) -> float:
        """One draw mapped to [0, 1). Float convenience for Monte Carlo code."""
        return self.next_u64() / 2.0**64

    def spawn(self, index: int) -> "RandomSource":
        """Derive an independent child stream.

        Child seed = mix(seed + (index + 1) * GOLDEN mod 2^64). Documented so
        fan-out simulations are replayable from the master seed alone.
        """
        if index < 0:
            raise DomainError("spawn index must be non-negative")
        return RandomSource(_mix((self.seed + (index + 1) * _GOLDEN) & _MASK64))


def dice_roll(rs: RandomSource, faces: int) -> int:
    """Roll a ``faces``-sided die: uniform integer in [1, faces], one draw."""
    if faces < 1:
        raise DomainError(f"a die needs at least one face, got {faces}")
    return ((rs.next_u64() * faces) >> 64) + 1


def _ceil_threshold(num: int, den: int) -> int:
    # smallest integer t with x < t  <=>  x / 2^64 < num / den for x in [0, 2^64)
    return -((-(num << 64)) // den)


class CategoricalSampler:
    """Precompiled categorical distribution over arbitrary outcomes.

    Thresholds are exact: outcome ``i`` is returned iff the draw ``x`` satisfies
    ``x / 2^64 < cum_i`` in rational arithmetic, so sampling matches the stated
    probabilities up to the 2^-64 granularity of a single draw.
    """

    __slots__ = ("outcomes", "_thresholds")

    def __init__(self, dist: Sequence[tuple[T, Fraction]]):
        total = sum((p for _, p in dist), Fraction(0))
        if total != 1:
            raise DomainError(f"distribution must sum to 1 exactly, got {total}")
        if any(p < 0 for _, p in dist):
            raise DomainError("probabilities must be non-negative")
        self.outcomes = [o for o, _ in dist]
        cum = Fraction(0)
        self._thresholds = []
        for _, p in dist:
            cum += p
            self._thresholds.append(_ceil_threshold(cum.numerator, cum.denominator))

    def sample(self, rs: RandomSource) -> T:
        x = rs.next_u64()
        for outcome, t in zip(self.outcomes, self._thresholds):
            if x < t:
                return outcome
        return self.outcomes[-1]  # unreachable: last threshold is 2^64


def sample_categorical(rs: RandomSource, dist: Sequence[tuple[T, Fraction]]) -> T:
    """Draw one outcome from an exact rational distribution (one draw)."""
    return CategoricalSampler(dist).sample(rs)


def dice_expressible(denominator: int) -> bool:
    """True if a probability with this reduced denominator is enactable with dice.

    Accepted: denominators dividing 6 (one d6 read as thirds/halves/sixths) or
    any power of a supported die size (repeated rolls of one die).
    """
    if denominator <= 0:
        return False
    if 6 % denominator == 0:
        return True
    for die in SUPPORTED_DICE:
        d = die
        while d <= denominator:
            if d == denominator:
                return True
            d *= die
    return False
