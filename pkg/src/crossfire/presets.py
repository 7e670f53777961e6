"""Default experiment configuration: universes, membership functions, and the
three shipped rule tables (green scheduling, reward, neighbor weighting).

Every constant here can be overridden from the experiment config file; the
builders below turn the (possibly overridden) plain-data description into
live fuzzy systems.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Mapping

from .fuzzy import (
    FuzzyInferenceSystem,
    FuzzyRule,
    LinguisticVariable,
    MembershipFunction,
)

__all__ = [
    "DEFAULT_CONFIG",
    "FuzzySystems",
    "build_variable",
    "build_fis",
    "build_systems",
    "default_config",
]

# Green split is kept inside [20, 80] s of a 100 s cycle so that each phase
# always gets at least 20 s and the green-ratio singularities are avoided.
GREEN_MIN = 20.0
GREEN_MAX = 80.0

_VOLUME_TERMS = [
    {"label": "low", "shape": "triangular", "points": [0, 0, 1750]},
    {"label": "medium", "shape": "triangular", "points": [0, 1750, 3500]},
    {"label": "high", "shape": "triangular", "points": [1750, 3500, 3500]},
]

_DELAY_TERMS = [
    {"label": "low", "shape": "triangular", "points": [0, 0, 60]},
    {"label": "medium", "shape": "triangular", "points": [0, 60, 120]},
    {"label": "high", "shape": "triangular", "points": [60, 120, 120]},
]

# Five-term partition of the green universe, symmetric about 50 s; the outer
# terms shoulder out to the universe edges and the peaks line up with the
# clamp range [20, 80].
_GREEN_FINE_TERMS = [
    {"label": "very_short", "shape": "trapezoidal", "points": [0, 0, 20, 35]},
    {"label": "short", "shape": "triangular", "points": [20, 35, 50]},
    {"label": "medium", "shape": "triangular", "points": [35, 50, 65]},
    {"label": "long", "shape": "triangular", "points": [50, 65, 80]},
    {"label": "very_long", "shape": "trapezoidal", "points": [65, 80, 100, 100]},
]

_GREEN_COARSE_TERMS = [
    {"label": "short", "shape": "triangular", "points": [0, 0, 50]},
    {"label": "medium", "shape": "triangular", "points": [0, 50, 100]},
    {"label": "long", "shape": "triangular", "points": [50, 100, 100]},
]

_REWARD_TERMS = [
    {"label": "neg_big", "shape": "triangular", "points": [-3, -3, -1.5]},
    {"label": "neg_small", "shape": "triangular", "points": [-3, -1.5, 0]},
    {"label": "zero", "shape": "triangular", "points": [-1.5, 0, 1.5]},
    {"label": "pos_small", "shape": "triangular", "points": [0, 1.5, 3]},
    {"label": "pos_big", "shape": "triangular", "points": [1.5, 3, 3]},
]

_WEIGHT_TERMS = [
    {"label": "low", "shape": "triangular", "points": [0, 0, 0.5]},
    {"label": "medium", "shape": "triangular", "points": [0, 0.5, 1]},
    {"label": "high", "shape": "triangular", "points": [0.5, 1, 1]},
]

# NS green grows with NS demand and shrinks with WE demand; symmetric under
# swapping the two approaches about the 50 s midpoint.
_GREEN_RULES = [
    {"if": {"volume_ns": "low", "volume_we": "low"}, "then": "medium"},
    {"if": {"volume_ns": "low", "volume_we": "medium"}, "then": "short"},
    {"if": {"volume_ns": "low", "volume_we": "high"}, "then": "very_short"},
    {"if": {"volume_ns": "medium", "volume_we": "low"}, "then": "long"},
    {"if": {"volume_ns": "medium", "volume_we": "medium"}, "then": "medium"},
    {"if": {"volume_ns": "medium", "volume_we": "high"}, "then": "short"},
    {"if": {"volume_ns": "high", "volume_we": "low"}, "then": "very_long"},
    {"if": {"volume_ns": "high", "volume_we": "medium"}, "then": "long"},
    {"if": {"volume_ns": "high", "volume_we": "high"}, "then": "medium"},
]

# Reward falls monotonically as delay and demand rise, spanning the full
# output range from pos_big (free-flowing) to neg_big (congested and slow).
_REWARD_RULES = [
    {"if": {"volume": "low", "delay": "low"}, "then": "pos_big"},
    {"if": {"volume": "low", "delay": "medium"}, "then": "pos_small"},
    {"if": {"volume": "low", "delay": "high"}, "then": "zero"},
    {"if": {"volume": "medium", "delay": "low"}, "then": "pos_small"},
    {"if": {"volume": "medium", "delay": "medium"}, "then": "zero"},
    {"if": {"volume": "medium", "delay": "high"}, "then": "neg_small"},
    {"if": {"volume": "high", "delay": "low"}, "then": "zero"},
    {"if": {"volume": "high", "delay": "medium"}, "then": "neg_small"},
    {"if": {"volume": "high", "delay": "high"}, "then": "neg_big"},
]


def _default_weight_rules() -> list[dict]:
    """27-rule table: coupling weight rises with congestion and with the
    disagreement between the agent's own green split and its neighbor's."""
    levels = ["short", "medium", "long"]
    volumes = ["low", "medium", "high"]
    weights = ["low", "medium", "high"]
    rules = []
    for vi, vol in enumerate(volumes):
        for oi, own in enumerate(levels):
            for ni, nb in enumerate(levels):
                out = weights[min(2, vi + abs(oi - ni))]
                rules.append({
                    "if": {"volume": vol, "own_green": own, "neighbor_green": nb},
                    "then": out,
                })
    return rules


DEFAULT_CONFIG: dict = {
    "sim": {
        "cycle_time": 100.0,
        "capacity": 3500.0,
        "horizon": 1000,
        "volume_max": 3500,
    },
    "seeds": [1, 2, 3, 4, 5],
    "controllers": ["fixed", "fuzzy", "ql", "fql", "gfql"],
    "fixed_green": 60.0,
    "learning": {
        "alpha": 0.5,
        "gamma": 0.7,
        "eta": 0.1,
        "epsilon": 0.1,
        "epsilon_decay": 0.995,
        "epsilon_floor": 0.01,
        "update_form": "standard",
        "volume_bins": 5,
        "candidate_actions": [20, 30, 40, 50, 60, 70, 80],
        "convergence_threshold": 1e-4,
    },
    "fuzzy": {
        "samples": 1001,
        "variables": {
            "vehicle_volume": {"universe": [0, 3500], "terms": _VOLUME_TERMS},
            "average_delay": {"universe": [0, 120], "terms": _DELAY_TERMS},
            "green_duration": {"universe": [0, 100], "terms": _GREEN_FINE_TERMS},
            "green_level": {"universe": [0, 100], "terms": _GREEN_COARSE_TERMS},
            "reward": {"universe": [-3, 3], "terms": _REWARD_TERMS},
            "weight": {"universe": [0, 1], "terms": _WEIGHT_TERMS},
        },
        "green_rules": _GREEN_RULES,
        "reward_rules": _REWARD_RULES,
        "weight_rules": _default_weight_rules(),
    },
    "output_dir": "runs",
}


def default_config() -> dict:
    """A deep copy of the default configuration, safe to mutate."""
    return copy.deepcopy(DEFAULT_CONFIG)


def build_variable(name: str, spec: Mapping) -> LinguisticVariable:
    """Build a linguistic variable named ``name`` from its config description."""
    universe = spec["universe"]
    terms = []
    for term in spec["terms"]:
        mf = MembershipFunction(term["shape"], tuple(term["points"]))
        terms.append((term["label"], mf))
    return LinguisticVariable(name, (universe[0], universe[1]), terms)


def _build_rules(rule_specs, output_name: str) -> list[FuzzyRule]:
    rules = []
    for spec in rule_specs:
        antecedent = tuple((var, term) for var, term in spec["if"].items())
        rules.append(FuzzyRule(antecedent, (output_name, spec["then"])))
    return rules


def build_fis(fuzzy_cfg: Mapping, which: str) -> FuzzyInferenceSystem:
    """Build one of the three shipped systems: 'green', 'reward', or 'weight'."""
    variables = fuzzy_cfg["variables"]
    samples = int(fuzzy_cfg.get("samples", 1001))
    if which == "green":
        inputs = [
            build_variable("volume_ns", variables["vehicle_volume"]),
            build_variable("volume_we", variables["vehicle_volume"]),
        ]
        output = build_variable("green", variables["green_duration"])
        rules = _build_rules(fuzzy_cfg["green_rules"], "green")
    elif which == "reward":
        inputs = [
            build_variable("volume", variables["vehicle_volume"]),
            build_variable("delay", variables["average_delay"]),
        ]
        output = build_variable("reward", variables["reward"])
        rules = _build_rules(fuzzy_cfg["reward_rules"], "reward")
    elif which == "weight":
        inputs = [
            build_variable("volume", variables["vehicle_volume"]),
            build_variable("own_green", variables["green_level"]),
            build_variable("neighbor_green", variables["green_level"]),
        ]
        output = build_variable("weight", variables["weight"])
        rules = _build_rules(fuzzy_cfg["weight_rules"], "weight")
    else:
        raise ValueError(f"unknown fuzzy system {which!r}")
    return FuzzyInferenceSystem(inputs, output, rules, samples=samples)


@dataclass(frozen=True)
class FuzzySystems:
    """The three inference systems one agent needs."""

    green: FuzzyInferenceSystem
    reward: FuzzyInferenceSystem
    weight: FuzzyInferenceSystem


def build_systems(fuzzy_cfg: Mapping) -> FuzzySystems:
    return FuzzySystems(
        green=build_fis(fuzzy_cfg, "green"),
        reward=build_fis(fuzzy_cfg, "reward"),
        weight=build_fis(fuzzy_cfg, "weight"),
    )
