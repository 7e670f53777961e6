"""Experiment configuration: JSON loading, deep-merge over the shipped
defaults, and field-by-field validation with path-qualified diagnostics.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .agents import CONTROLLER_KINDS, LearningParams
from .fuzzy import FuzzyDefinitionError
from .learning import UPDATE_FORMS
from .presets import build_systems, default_config

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "validate_config"]


class ConfigError(Exception):
    """Invalid experiment configuration; message carries the field path."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _number(data: Mapping, path: str, key: str, *, minimum=None,
            maximum=None, exclusive_min=False, integer=False):
    value = data[key]
    full = f"{path}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(full, f"expected a number, got {value!r}")
    if integer and not isinstance(value, int):
        _fail(full, f"expected an integer, got {value!r}")
    if minimum is not None:
        if exclusive_min and value <= minimum:
            _fail(full, f"must be > {minimum}, got {value}")
        if not exclusive_min and value < minimum:
            _fail(full, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        _fail(full, f"must be <= {maximum}, got {value}")
    return value


def deep_merge(base: dict, override: Mapping) -> dict:
    """Recursively merge ``override`` into a copy of ``base``.

    Dicts merge key-by-key; every other value (including lists) replaces the
    default wholesale.
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully-resolved, validated experiment description."""

    data: dict
    cycle_time: float
    capacity: float
    horizon: int
    volume_max: int
    seeds: tuple[int, ...]
    controllers: tuple[str, ...]
    fixed_green: float
    params: LearningParams
    fuzzy: dict
    output_dir: str

    def with_overrides(
        self,
        *,
        output_dir: str | None = None,
        seeds: tuple[int, ...] | None = None,
        horizon: int | None = None,
        controllers: tuple[str, ...] | None = None,
    ) -> "ExperimentConfig":
        """Re-validate with command-line overrides applied."""
        data = copy.deepcopy(self.data)
        if output_dir is not None:
            data["output_dir"] = output_dir
        if seeds is not None:
            data["seeds"] = list(seeds)
        if horizon is not None:
            data["sim"]["horizon"] = horizon
        if controllers is not None:
            data["controllers"] = list(controllers)
        return validate_config(data)


def validate_config(data: Mapping) -> ExperimentConfig:
    """Validate a merged config dict; raises ConfigError naming the field."""
    if not isinstance(data, Mapping):
        raise ConfigError("config: expected a JSON object at top level")
    resolved = deep_merge(default_config(), data)

    known = set(default_config())
    for key in resolved:
        if key not in known:
            _fail(key, "unknown configuration key")

    sim = resolved["sim"]
    if not isinstance(sim, dict):
        _fail("sim", "expected an object")
    cycle_time = float(_number(sim, "sim", "cycle_time", minimum=0, exclusive_min=True))
    capacity = float(_number(sim, "sim", "capacity", minimum=0, exclusive_min=True))
    horizon = _number(sim, "sim", "horizon", minimum=1, integer=True)
    volume_max = _number(sim, "sim", "volume_max", minimum=0, integer=True)

    seeds = resolved["seeds"]
    if not isinstance(seeds, list) or not seeds:
        _fail("seeds", "expected a non-empty list of integers")
    for i, seed in enumerate(seeds):
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            _fail(f"seeds[{i}]", f"expected a nonnegative integer, got {seed!r}")

    controllers = resolved["controllers"]
    if not isinstance(controllers, list) or not controllers:
        _fail("controllers", "expected a non-empty list")
    for i, kind in enumerate(controllers):
        if kind not in CONTROLLER_KINDS:
            _fail(f"controllers[{i}]",
                  f"unknown controller {kind!r}; expected one of {list(CONTROLLER_KINDS)}")
    if len(set(controllers)) != len(controllers):
        _fail("controllers", f"duplicate entries in {controllers}")

    fixed_green = float(_number(resolved, "config", "fixed_green",
                                minimum=0, exclusive_min=True))
    if fixed_green >= cycle_time:
        _fail("fixed_green", f"must be < sim.cycle_time ({cycle_time}), got {fixed_green}")

    learning = resolved["learning"]
    if not isinstance(learning, dict):
        _fail("learning", "expected an object")
    alpha = float(_number(learning, "learning", "alpha", minimum=0, maximum=1))
    gamma = float(_number(learning, "learning", "gamma", minimum=0, maximum=1))
    eta = float(_number(learning, "learning", "eta", minimum=0, exclusive_min=True))
    epsilon = float(_number(learning, "learning", "epsilon", minimum=0, maximum=1))
    decay = float(_number(learning, "learning", "epsilon_decay", minimum=0, maximum=1))
    floor = float(_number(learning, "learning", "epsilon_floor", minimum=0, maximum=1))
    update_form = learning["update_form"]
    if update_form not in UPDATE_FORMS:
        _fail("learning.update_form",
              f"expected one of {list(UPDATE_FORMS)}, got {update_form!r}")
    bins = _number(learning, "learning", "volume_bins", minimum=1, integer=True)
    conv = float(_number(learning, "learning", "convergence_threshold",
                         minimum=0, exclusive_min=True))

    actions = learning["candidate_actions"]
    if not isinstance(actions, list) or not actions:
        _fail("learning.candidate_actions", "expected a non-empty list of green times")
    for i, action in enumerate(actions):
        if isinstance(action, bool) or not isinstance(action, (int, float)):
            _fail(f"learning.candidate_actions[{i}]", f"expected a number, got {action!r}")
        if not 0.0 < action < cycle_time:
            _fail(f"learning.candidate_actions[{i}]",
                  f"must lie strictly inside (0, {cycle_time}), got {action}")

    fuzzy = resolved["fuzzy"]
    if not isinstance(fuzzy, dict):
        _fail("fuzzy", "expected an object")
    _number(fuzzy, "fuzzy", "samples", minimum=3, integer=True)
    try:
        build_systems(fuzzy)
    except (FuzzyDefinitionError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"fuzzy: {exc}") from exc

    output_dir = resolved["output_dir"]
    if not isinstance(output_dir, str) or not output_dir:
        _fail("output_dir", f"expected a non-empty string, got {output_dir!r}")

    params = LearningParams(
        alpha=alpha,
        gamma=gamma,
        eta=eta,
        epsilon=epsilon,
        epsilon_decay=decay,
        epsilon_floor=floor,
        update_form=update_form,
        volume_bins=bins,
        candidate_actions=tuple(float(a) for a in actions),
        convergence_threshold=conv,
    )
    return ExperimentConfig(
        data=resolved,
        cycle_time=cycle_time,
        capacity=capacity,
        horizon=horizon,
        volume_max=volume_max,
        seeds=tuple(seeds),
        controllers=tuple(controllers),
        fixed_green=fixed_green,
        params=params,
        fuzzy=fuzzy,
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a JSON config file, merge it over the defaults, and validate.

    JSON syntax errors are reported with their line and column.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return validate_config(data)
