"""State discretization and a tabular epsilon-greedy Q-learner."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

N_BINS = 10
QTABLE_HEADER = ("state", "action", "value")


@dataclass(frozen=True)
class BinSpec:
    lower: float
    upper: float
    n: int = N_BINS

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"bin bounds need lower < upper, got [{self.lower}, {self.upper}]")
        if self.n < 2:
            raise ValueError(f"need at least 2 bins, got {self.n}")

    @property
    def edges(self) -> list[float]:
        """Interior edges; the outer bins are open toward -inf / +inf."""
        width = self.upper - self.lower
        return [self.lower + width * k / self.n for k in range(1, self.n)]


def to_bin(value: float, lo: float, hi: float, n: int = N_BINS) -> int:
    """Index of the left-closed cell holding ``value``."""
    return bisect.bisect_right(BinSpec(lo, hi, n).edges, value)


def encode(bins: Sequence[int], n: int = N_BINS) -> int:
    """Concatenate per-variable bin indices into one state id."""
    state = 0
    for b in bins:
        if not 0 <= b < n:
            raise ValueError(f"bin index {b} outside [0, {n})")
        state = state * n + int(b)
    return state


def decode(state: int, n_vars: int = 4, n: int = N_BINS) -> tuple[int, ...]:
    if not 0 <= state < n**n_vars:
        raise ValueError(f"state id {state} outside [0, {n ** n_vars})")
    digits = []
    for _ in range(n_vars):
        state, d = divmod(state, n)
        digits.append(d)
    return tuple(reversed(digits))


def default_bins() -> tuple[BinSpec, ...]:
    """Bins for (x, x_dot, theta, theta_dot) of the Cart-Pole."""
    return (
        BinSpec(-2.4, 2.4),
        BinSpec(-1.0, 1.0),
        BinSpec((90 - 12) / 180 * math.pi, (90 + 12) / 180 * math.pi),
        BinSpec(-2.0, 2.0),
    )


class Discretizer:
    def __init__(self, specs: Sequence[BinSpec] | None = None):
        self.specs = tuple(specs) if specs is not None else default_bins()
        self._edges = [s.edges for s in self.specs]
        self._radix = self.specs[0].n
        if any(s.n != self._radix for s in self.specs):
            raise ValueError("all variables must use the same bin count")

    @property
    def n_states(self) -> int:
        return self._radix ** len(self.specs)

    def bins(self, observation: Sequence[float]) -> tuple[int, ...]:
        if len(observation) != len(self.specs):
            raise ValueError(f"expected {len(self.specs)} values, got {len(observation)}")
        return tuple(bisect.bisect_right(e, v) for e, v in zip(self._edges, observation))

    def __call__(self, observation: Sequence[float]) -> int:
        return encode(self.bins(observation), self._radix)


@dataclass(frozen=True)
class LearnerParams:
    learning_rate: float = 0.2
    discount_factor: float = 1.0
    exploration_rate: float = 0.5
    exploration_decay_rate: float = 0.99
    decay_per_episode: bool = False

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0 <= self.discount_factor <= 1:
            raise ValueError(f"discount_factor must be in [0, 1], got {self.discount_factor}")
        if not 0 <= self.exploration_rate <= 1:
            raise ValueError(f"exploration_rate must be in [0, 1], got {self.exploration_rate}")
        if not 0 < self.exploration_decay_rate <= 1:
            raise ValueError(
                f"exploration_decay_rate must be in (0, 1], got {self.exploration_decay_rate}"
            )


def choose_action(q: np.ndarray, state: int, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy pick; exploitation breaks ties toward the lowest action."""
    if rng.random() < epsilon:
        return int(rng.integers(q.shape[1]))
    return int(np.argmax(q[state]))


def update(
    q: np.ndarray,
    s: int,
    a: int,
    r: float,
    s_next: int,
    done: bool,
    p: LearnerParams,
) -> float:
    """Temporal-difference update of ``q[s, a]`` in place; returns the new value.

    Terminal transitions do not bootstrap from ``s_next``.
    """
    target = r if done else r + p.discount_factor * float(np.max(q[s_next]))
    q[s, a] += p.learning_rate * (target - q[s, a])
    return float(q[s, a])


def decay(epsilon: float, rate: float) -> float:
    return epsilon * rate


class QLearner:
    """Q-table over encoded states plus the exploration schedule.

    One generator, seeded at construction, initializes the table and then
    feeds every exploration draw, in that order.
    """

    def __init__(
        self,
        n_states: int = N_BINS**4,
        n_actions: int = 2,
        params: LearnerParams = LearnerParams(),
        seed: int | None = None,
    ):
        self.params = params
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.q = self.rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
        self.epsilon = params.exploration_rate

    @property
    def n_actions(self) -> int:
        return self.q.shape[1]

    def random_action(self) -> int:
        return int(self.rng.integers(self.n_actions))

    def act(self, state: int) -> int:
        return choose_action(self.q, state, self.epsilon, self.rng)

    def learn(self, s: int, a: int, r: float, s_next: int, done: bool) -> float:
        return update(self.q, s, a, r, s_next, done, self.params)

    def step_decay(self) -> None:
        if not self.params.decay_per_episode:
            self.epsilon = decay(self.epsilon, self.params.exploration_decay_rate)

    def episode_decay(self) -> None:
        if self.params.decay_per_episode:
            self.epsilon = decay(self.epsilon, self.params.exploration_decay_rate)

    def rows(self):
        for s in range(self.q.shape[0]):
            for a in range(self.q.shape[1]):
                yield (s, a, repr(float(self.q[s, a])))

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(QTABLE_HEADER)
            writer.writerows(self.rows())

    def import_csv(self, path: str | Path) -> None:
        table = np.full_like(self.q, np.nan)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                table[int(row["state"]), int(row["action"])] = float(row["value"])
        if not np.all(np.isfinite(table)):
            raise ValueError(f"{path} does not cover every (state, action) pair with finite values")
        self.q = table
