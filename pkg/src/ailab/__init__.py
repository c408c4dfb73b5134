"""ai-lab: four classroom AI games as a deterministic, verifiable engine.

Subpackages by activity:

- :mod:`ailab.search` -- role-decomposed graph search (BFS/DFS/UCS/Greedy/A*)
- :mod:`ailab.rbj` + :mod:`ailab.mdp` -- the Red and Black Jack card game,
  compiled to an exact MDP and solved by value iteration
- :mod:`ailab.qmaze` -- GridWorld tabular Q-learning with dice-roll
  explore/exploit episodes
- :mod:`ailab.hmm` -- the Two Spies pursuit game with exact Bayesian
  filtering, a particle filter, and a path-enumeration oracle
- :mod:`ailab.scenario` -- scenario file formats shared by all of the above
- :mod:`ailab.sessions` / :mod:`ailab.service` -- interactive sessions over
  HTTP + WebSocket with role-based redaction and bit-exact replay
"""

from .rng import RandomSource, dice_roll, sample_categorical

__all__ = ["RandomSource", "dice_roll", "sample_categorical"]

__version__ = "0.1.0"
