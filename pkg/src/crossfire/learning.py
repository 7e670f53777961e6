"""Value-update machinery: tabular Q-learning, per-rule fuzzy Q-learning, and
the neighbor-weighted reward coupling that ties an agent's update to the
outcomes of adjacent intersections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .fuzzy import FuzzyInferenceSystem, NoRuleFiredError

__all__ = [
    "UPDATE_FORMS",
    "choose_index",
    "QTable",
    "NeighborReward",
    "combine_rewards",
    "FqlStepRecord",
    "FqlRuleBase",
    "fuzzy_reward",
    "fuzzy_weight",
]

# "standard" is the usual Q-learning target (1-a)Q + a(r + g*maxQ').
# "literal" keeps an extra -Q inside the bracket: (1-a)Q + a(r + g*maxQ' - Q).
UPDATE_FORMS = ("standard", "literal")

REWARD_RANGE = (-3.0, 3.0)
WEIGHT_RANGE = (0.0, 1.0)


def choose_index(values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy index selection; ties in argmax go to the lowest index.

    Always consumes one uniform draw, plus one integer draw when exploring,
    so callers sharing an RNG stream stay aligned regardless of outcomes.
    """
    if rng.random() < epsilon:
        return int(rng.integers(len(values)))
    return int(np.argmax(values))


@dataclass(frozen=True)
class NeighborReward:
    """A neighbor's reward and the coupling weight applied to it."""

    neighbor: Hashable
    reward: float
    weight: float

    def __post_init__(self) -> None:
        lo, hi = REWARD_RANGE
        if not lo <= self.reward <= hi:
            raise ValueError(
                f"neighbor reward must lie in [{lo}, {hi}], got {self.reward}")
        wlo, whi = WEIGHT_RANGE
        if not wlo <= self.weight <= whi:
            raise ValueError(
                f"coupling weight must lie in [{wlo}, {whi}], got {self.weight}")


def combine_rewards(own: float, neighbors: Sequence[NeighborReward]) -> float:
    """Own reward plus the weighted sum of neighbor rewards."""
    total = own
    for nb in neighbors:
        total += nb.weight * nb.reward
    return total


class QTable:
    """Discrete state-action values with epsilon-greedy-friendly zero init.

    Rows are created lazily at zero, matching the convention that every
    state-action pair starts with no value.
    """

    def __init__(
        self,
        n_actions: int,
        alpha: float = 0.5,
        gamma: float = 0.7,
        update_form: str = "standard",
    ) -> None:
        if n_actions < 1:
            raise ValueError("need at least one action")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"learning rate must lie in [0, 1], got {alpha}")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {gamma}")
        if update_form not in UPDATE_FORMS:
            raise ValueError(f"update form must be one of {UPDATE_FORMS}, got {update_form!r}")
        self.n_actions = int(n_actions)
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.update_form = update_form
        self._rows: dict[Hashable, np.ndarray] = {}
        self.last_delta = 0.0
        self.update_count = 0

    def row(self, state: Hashable) -> np.ndarray:
        values = self._rows.get(state)
        if values is None:
            values = np.zeros(self.n_actions)
            self._rows[state] = values
        return values

    def value(self, state: Hashable, action: int) -> float:
        return float(self.row(state)[action])

    def best_value(self, state: Hashable) -> float:
        return float(self.row(state).max())

    def update(self, state: Hashable, action: int, reward: float,
               next_state: Hashable) -> float:
        """One value update for (state, action); returns the new value."""
        row = self.row(state)
        old = row[action]
        target = reward + self.gamma * self.best_value(next_state)
        if self.update_form == "literal":
            target -= old
        new = (1.0 - self.alpha) * old + self.alpha * target
        row[action] = new
        self.last_delta = abs(new - old)
        self.update_count += 1
        return float(new)

    def update_with_neighbors(
        self,
        state: Hashable,
        action: int,
        own_reward: float,
        neighbors: Sequence[NeighborReward],
        next_state: Hashable,
    ) -> float:
        """Update with the neighbor-coupled reward.

        With no neighbors this is exactly :meth:`update` (same code path,
        bit-identical result).
        """
        if not neighbors:
            return self.update(state, action, own_reward, next_state)
        return self.update(state, action, combine_rewards(own_reward, neighbors),
                           next_state)

    def states(self) -> tuple[Hashable, ...]:
        return tuple(self._rows)


@dataclass(frozen=True)
class FqlStepRecord:
    """Bookkeeping between action selection and the value update.

    ``phi`` holds the normalized firing strengths (summing to one), ``chosen``
    the selected candidate index per rule, ``action`` the strength-weighted
    crisp action, and ``value`` the matching blended state-action value.
    """

    phi: np.ndarray
    chosen: np.ndarray
    action: float
    value: float

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float)
        chosen = np.asarray(self.chosen, dtype=int)
        if phi.shape != chosen.shape:
            raise ValueError("phi and chosen must have one entry per rule")
        if abs(float(phi.sum()) - 1.0) > 1e-9:
            raise ValueError(f"firing strengths must sum to 1, got {phi.sum()!r}")
        phi.setflags(write=False)
        chosen.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "chosen", chosen)


class FqlRuleBase:
    """Per-rule candidate actions with learned values.

    Every rule shares the same candidate-action vector; rule i keeps a value
    q[i, j] for candidate j, initialized to zero.  Selection is epsilon-greedy
    independently per rule and the executed action is the firing-strength
    blend of the per-rule choices.
    """

    def __init__(
        self,
        n_rules: int,
        candidate_actions: Sequence[float],
        eta: float = 0.1,
        gamma: float = 0.7,
        epsilon: float = 0.1,
    ) -> None:
        if n_rules < 1:
            raise ValueError("need at least one rule")
        actions = np.asarray(candidate_actions, dtype=float)
        if actions.ndim != 1 or actions.size == 0:
            raise ValueError("candidate actions must be a non-empty vector")
        if eta <= 0.0:
            raise ValueError(f"step size must be positive, got {eta}")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {gamma}")
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"exploration rate must lie in [0, 1], got {epsilon}")
        actions.setflags(write=False)
        self.actions = actions
        self.q = np.zeros((int(n_rules), actions.size))
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.epsilon = float(epsilon)
        self.last_delta = 0.0
        self.update_count = 0

    @property
    def n_rules(self) -> int:
        return self.q.shape[0]

    def normalize(self, strengths: Sequence[float]) -> np.ndarray:
        phi = np.asarray(strengths, dtype=float)
        if phi.shape != (self.n_rules,):
            raise ValueError(f"expected {self.n_rules} firing strengths, got {phi.shape}")
        total = float(phi.sum())
        if total <= 0.0:
            raise ValueError("zero firing mass: no rule fired")
        return phi / total

    def select(self, strengths: Sequence[float], rng: np.random.Generator) -> FqlStepRecord:
        """Pick one candidate per rule (epsilon-greedy) and blend by strength."""
        phi = self.normalize(strengths)
        chosen = np.empty(self.n_rules, dtype=int)
        for i in range(self.n_rules):
            chosen[i] = choose_index(self.q[i], self.epsilon, rng)
        action = float(np.sum(phi * self.actions[chosen]))
        value = float(np.sum(phi * self.q[np.arange(self.n_rules), chosen]))
        return FqlStepRecord(phi=phi, chosen=chosen, action=action, value=value)

    def state_value(self, phi: np.ndarray) -> float:
        """Strength-blended value of the greedy choice per rule."""
        return float(np.sum(np.asarray(phi, dtype=float) * self.q.max(axis=1)))

    def update(self, record: FqlStepRecord, total_reward: float,
               next_phi: Sequence[float] | None = None) -> float:
        """Temporal-difference update of every rule's chosen candidate.

        The TD error uses the blended next-state value; each rule's chosen
        q moves by eta * delta * phi_i.  Returns the TD error.
        """
        if record.chosen.shape != (self.n_rules,):
            raise ValueError("record does not match this rule base")
        if (record.chosen < 0).any() or (record.chosen >= self.actions.size).any():
            raise ValueError("record holds out-of-range candidate indices")
        phi_next = record.phi if next_phi is None else np.asarray(next_phi, dtype=float)
        delta = total_reward + self.gamma * self.state_value(phi_next) - record.value
        increments = self.eta * delta * record.phi
        self.q[np.arange(self.n_rules), record.chosen] += increments
        self.last_delta = float(np.max(np.abs(increments)))
        self.update_count += 1
        return float(delta)


def _midpoint(fis: FuzzyInferenceSystem) -> float:
    lo, hi = fis.output.universe
    return (lo + hi) / 2.0


def fuzzy_reward(fis: FuzzyInferenceSystem, volume: float, delay: float) -> float:
    """Reward for a (volume, delay) outcome; bounded by the reward universe.

    Delay is clamped to its variable's universe (congested cycles can exceed
    it).  If no rule fires the midpoint of the output universe is returned.
    """
    lo, hi = fis.variables["delay"].universe
    delay = min(max(delay, lo), hi)
    try:
        return fis.evaluate({"volume": volume, "delay": delay})
    except NoRuleFiredError:
        return _midpoint(fis)


def fuzzy_weight(
    fis: FuzzyInferenceSystem,
    own_green: float,
    neighbor_green: float,
    volume: float,
) -> float:
    """Coupling weight in [0, 1] for one neighbor's reward."""
    try:
        return fis.evaluate({
            "volume": volume,
            "own_green": own_green,
            "neighbor_green": neighbor_green,
        })
    except NoRuleFiredError:
        return _midpoint(fis)
