"""Per-intersection signal controllers.

Five controller kinds share one interface: ``decide`` maps observed approach
volumes to a green split, ``compute_reward`` scores the resulting delay, and
``learn`` (a no-op for the non-learning kinds) updates internal values.  The
coordinated variant additionally weighs neighbor rewards into its update;
all other kinds ignore the exchanged messages.

Each controller owns its state exclusively; coordination happens only
through :class:`NeighborExchange` values handed over by the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fuzzy import NoRuleFiredError
from .learning import (
    REWARD_RANGE,
    FqlRuleBase,
    FqlStepRecord,
    NeighborReward,
    QTable,
    choose_index,
    combine_rewards,
    fuzzy_reward,
    fuzzy_weight,
)
from .presets import GREEN_MAX, GREEN_MIN, FuzzySystems
from .traffic import PhaseSchedule

__all__ = [
    "CONTROLLER_KINDS",
    "GREEN_MIN",
    "GREEN_MAX",
    "LearningParams",
    "NeighborExchange",
    "Controller",
    "FixedTimeController",
    "FuzzyController",
    "QLearningController",
    "FuzzyQController",
    "CoordinatedFuzzyQController",
    "build_controller",
]

CONTROLLER_KINDS = ("fixed", "fuzzy", "ql", "fql", "gfql")


@dataclass(frozen=True)
class NeighborExchange:
    """What one agent broadcasts after a cycle: its green split and reward."""

    sender: int
    green_time: float
    reward: float


@dataclass(frozen=True)
class LearningParams:
    """Knobs shared by the learning controllers."""

    alpha: float = 0.5
    gamma: float = 0.7
    eta: float = 0.1
    epsilon: float = 0.1
    epsilon_decay: float = 0.995
    epsilon_floor: float = 0.01
    update_form: str = "standard"
    volume_bins: int = 5
    candidate_actions: tuple[float, ...] = (20, 30, 40, 50, 60, 70, 80)
    convergence_threshold: float = 1e-4


class Controller:
    """Common state and the decide/reward/learn cycle shared by all kinds."""

    kind = "base"
    learns = False

    def __init__(self, cycle_time: float, systems: FuzzySystems) -> None:
        if cycle_time <= 0.0:
            raise ValueError(f"cycle time must be positive, got {cycle_time}")
        self.cycle_time = float(cycle_time)
        self.systems = systems
        self.volume_ns = 0.0
        self.volume_we = 0.0
        self.schedule: PhaseSchedule | None = None
        self.last_reward: float | None = None
        self.last_couplings: tuple[tuple[int, float, float], ...] = ()

    @property
    def mean_volume(self) -> float:
        """Volume proxy fed to the reward and weighting systems."""
        return (self.volume_ns + self.volume_we) / 2.0

    def decide(self, volume_ns: float, volume_we: float) -> PhaseSchedule:
        """Observe approach volumes and schedule the next cycle's green split."""
        for name, v in (("NS", volume_ns), ("WE", volume_we)):
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} volume must be finite and nonnegative, got {v}")
        self.volume_ns = float(volume_ns)
        self.volume_we = float(volume_we)
        self.last_reward = None
        green = min(max(self._green_time(), GREEN_MIN), GREEN_MAX)
        self.schedule = PhaseSchedule(self.cycle_time, green)
        return self.schedule

    def _green_time(self) -> float:
        raise NotImplementedError

    def compute_reward(self, delay: float) -> float:
        """Reward for the delay produced by the last decision."""
        if delay < 0.0:
            raise ValueError(f"delay must be nonnegative, got {delay}")
        reward = fuzzy_reward(self.systems.reward, self.mean_volume, delay)
        lo, hi = REWARD_RANGE
        if not lo <= reward <= hi:
            raise RuntimeError(f"reward {reward} escaped [{lo}, {hi}]")
        self.last_reward = reward
        return reward

    def learn(self, delay: float, exchanges: Sequence[NeighborExchange] = ()) -> None:
        """Update internal values from the cycle's outcome (no-op here)."""

    def has_converged(self) -> bool:
        """Whether the last cycle's largest value change fell below threshold.

        Diagnostic only; simulations always run their configured horizon.
        Non-learning controllers never report convergence.
        """
        return False

    def _own_reward(self, delay: float) -> float:
        if self.last_reward is None:
            return self.compute_reward(delay)
        return self.last_reward


class FixedTimeController(Controller):
    """Constant green split, independent of traffic."""

    kind = "fixed"

    def __init__(self, cycle_time: float, systems: FuzzySystems,
                 green_time: float = 60.0) -> None:
        super().__init__(cycle_time, systems)
        if not 0.0 < green_time < cycle_time:
            raise ValueError(
                f"fixed green must lie strictly inside (0, {cycle_time}), got {green_time}")
        self.green_time = float(green_time)

    def _green_time(self) -> float:
        return self.green_time


class FuzzyController(Controller):
    """Static rule table: Mamdani evaluation of the green-scheduling system."""

    kind = "fuzzy"

    def _green_time(self) -> float:
        try:
            return self.systems.green.evaluate({
                "volume_ns": self.volume_ns,
                "volume_we": self.volume_we,
            })
        except NoRuleFiredError:
            lo, hi = self.systems.green.output.universe
            return (lo + hi) / 2.0


class _LearningController(Controller):
    learns = True

    def __init__(self, cycle_time: float, systems: FuzzySystems,
                 params: LearningParams, rng: np.random.Generator) -> None:
        super().__init__(cycle_time, systems)
        self.params = params
        self.rng = rng
        self.epsilon = float(params.epsilon)

    def _decay_epsilon(self) -> None:
        self.epsilon = max(self.params.epsilon_floor,
                           self.epsilon * self.params.epsilon_decay)


class QLearningController(_LearningController):
    """Tabular control on binned approach volumes."""

    kind = "ql"

    def __init__(self, cycle_time: float, systems: FuzzySystems,
                 params: LearningParams, rng: np.random.Generator) -> None:
        super().__init__(cycle_time, systems, params, rng)
        self.actions = tuple(float(a) for a in params.candidate_actions)
        self.table = QTable(len(self.actions), alpha=params.alpha,
                            gamma=params.gamma, update_form=params.update_form)
        # Bins partition the fuzzified volume universe into equal widths.
        self._volume_span = systems.reward.variables["volume"].universe[1]
        self._pending: tuple[tuple[int, int], int] | None = None

    def discretize(self, volume: float) -> int:
        bins = self.params.volume_bins
        idx = int(volume * bins / self._volume_span)
        return min(bins - 1, max(0, idx))

    def _green_time(self) -> float:
        state = (self.discretize(self.volume_ns), self.discretize(self.volume_we))
        action = choose_index(self.table.row(state), self.epsilon, self.rng)
        self._pending = (state, action)
        return self.actions[action]

    def learn(self, delay: float, exchanges: Sequence[NeighborExchange] = ()) -> None:
        # Neighbor messages are deliberately ignored by this kind.
        if self._pending is None:
            return
        reward = self._own_reward(delay)
        state, action = self._pending
        # Volumes are redrawn independently each cycle, so the observed state
        # doubles as the bootstrap successor.
        self.table.update(state, action, reward, state)
        self._decay_epsilon()

    def has_converged(self) -> bool:
        return (self.table.update_count > 0
                and self.table.last_delta < self.params.convergence_threshold)


class FuzzyQController(_LearningController):
    """Per-rule candidate learning over the green-scheduling rule base."""

    kind = "fql"

    def __init__(self, cycle_time: float, systems: FuzzySystems,
                 params: LearningParams, rng: np.random.Generator) -> None:
        super().__init__(cycle_time, systems, params, rng)
        self.rule_base = FqlRuleBase(
            n_rules=len(systems.green.rules),
            candidate_actions=params.candidate_actions,
            eta=params.eta,
            gamma=params.gamma,
            epsilon=params.epsilon,
        )
        self._record: FqlStepRecord | None = None

    def _green_time(self) -> float:
        strengths = self.systems.green.rule_strengths({
            "volume_ns": self.volume_ns,
            "volume_we": self.volume_we,
        })
        self.rule_base.epsilon = self.epsilon
        if strengths.sum() <= 0.0:
            self._record = None
            lo, hi = self.systems.green.output.universe
            return (lo + hi) / 2.0
        self._record = self.rule_base.select(strengths, self.rng)
        return self._record.action

    def _coupled(self, exchanges: Sequence[NeighborExchange]) -> list[NeighborReward]:
        return []

    def learn(self, delay: float, exchanges: Sequence[NeighborExchange] = ()) -> None:
        if self._record is None:
            return
        reward = self._own_reward(delay)
        coupled = self._coupled(exchanges)
        self.last_couplings = tuple(
            (nb.neighbor, nb.weight, nb.reward) for nb in coupled)
        total = combine_rewards(reward, coupled) if coupled else reward
        # Same-cycle bootstrap: volumes are i.i.d. across cycles, so the
        # firing pattern just acted on serves as the successor state.
        self.rule_base.update(self._record, total, self._record.phi)
        self._decay_epsilon()

    def has_converged(self) -> bool:
        return (self.rule_base.update_count > 0
                and self.rule_base.last_delta < self.params.convergence_threshold)


class CoordinatedFuzzyQController(FuzzyQController):
    """Fuzzy Q-learning whose reward folds in weighted neighbor rewards.

    The weight of each neighbor's reward comes from the weighting system fed
    with this agent's green time, the neighbor's green time, and the local
    volume.  With no exchanges the behavior collapses exactly to the plain
    fuzzy Q-learning controller.
    """

    kind = "gfql"

    def _coupled(self, exchanges: Sequence[NeighborExchange]) -> list[NeighborReward]:
        if not exchanges or self.schedule is None:
            return []
        own_green = self.schedule.green_ns
        volume = self.mean_volume
        coupled = []
        for ex in exchanges:
            weight = fuzzy_weight(self.systems.weight, own_green, ex.green_time, volume)
            coupled.append(NeighborReward(ex.sender, ex.reward, weight))
        return coupled


def build_controller(
    kind: str,
    *,
    cycle_time: float,
    systems: FuzzySystems,
    params: LearningParams | None = None,
    rng: np.random.Generator | None = None,
    fixed_green: float = 60.0,
) -> Controller:
    """Construct a controller by its short kind id."""
    params = params or LearningParams()
    if kind == "fixed":
        return FixedTimeController(cycle_time, systems, green_time=fixed_green)
    if kind == "fuzzy":
        return FuzzyController(cycle_time, systems)
    if kind in ("ql", "fql", "gfql"):
        if rng is None:
            raise ValueError(f"controller kind {kind!r} needs an RNG stream")
        cls = {"ql": QLearningController, "fql": FuzzyQController,
               "gfql": CoordinatedFuzzyQController}[kind]
        return cls(cycle_time, systems, params, rng)
    raise ValueError(f"unknown controller kind {kind!r}; expected one of {CONTROLLER_KINDS}")
