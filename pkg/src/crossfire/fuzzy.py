"""Mamdani fuzzy inference: piecewise-linear membership functions, min/max
rule evaluation, and centroid defuzzification over a sampled output universe.

Everything in this module is immutable after construction and free of side
effects, so systems can be shared read-only between agents and threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "FuzzyDefinitionError",
    "NoRuleFiredError",
    "MembershipFunction",
    "LinguisticVariable",
    "FuzzyRule",
    "FuzzyInferenceSystem",
    "fire_strength",
    "centroid",
]


class FuzzyDefinitionError(ValueError):
    """A membership function, variable, or rule base is ill-formed."""


class NoRuleFiredError(RuntimeError):
    """No rule fired for the given inputs; the aggregate has zero mass.

    Fallback policy is owned by callers (agents substitute the midpoint of
    the output universe).
    """


@dataclass(frozen=True)
class MembershipFunction:
    """Triangular or trapezoidal fuzzy set over the reals.

    ``points`` are the breakpoints in nondecreasing order: (a, b, c) for a
    triangle peaking at b, or (a, b, c, d) for a trapezoid whose core is
    [b, c].  Degree is exactly 0 outside the support and exactly 1 on the
    core.
    """

    kind: str
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.kind == "triangular":
            if len(pts) != 3:
                raise FuzzyDefinitionError("triangular MF needs 3 points")
        elif self.kind == "trapezoidal":
            if len(pts) != 4:
                raise FuzzyDefinitionError("trapezoidal MF needs 4 points")
        else:
            raise FuzzyDefinitionError(f"unknown MF shape {self.kind!r}")
        if any(lo > hi for lo, hi in zip(pts, pts[1:])):
            raise FuzzyDefinitionError(
                f"{self.kind} points must be nondecreasing, got {pts}")
        if pts[0] == pts[-1]:
            raise FuzzyDefinitionError(
                f"{self.kind} support must have positive width, got {pts}")

    @staticmethod
    def triangular(a: float, b: float, c: float) -> "MembershipFunction":
        return MembershipFunction("triangular", (a, b, c))

    @staticmethod
    def trapezoidal(a: float, b: float, c: float, d: float) -> "MembershipFunction":
        return MembershipFunction("trapezoidal", (a, b, c, d))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """Breakpoints normalized to trapezoid form (a, b, c, d), b == c for triangles."""
        if self.kind == "triangular":
            a, b, c = self.points
            return (a, b, b, c)
        return self.points  # type: ignore[return-value]

    @property
    def support(self) -> tuple[float, float]:
        c = self.corners
        return (c[0], c[3])

    def degree(self, x: float) -> float:
        """Membership degree of ``x``, always within [0, 1]."""
        a, b, c, d = self.corners
        if x < a or x > d:
            return 0.0
        if b <= x <= c:
            return 1.0
        if x < b:
            return (x - a) / (b - a)
        return (d - x) / (d - c)

    def degrees(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`degree` over an array of points."""
        xs = np.asarray(xs, dtype=float)
        a, b, c, d = self.corners
        out = np.zeros(xs.shape)
        out[(xs >= b) & (xs <= c)] = 1.0
        if b > a:
            rising = (xs >= a) & (xs < b)
            out[rising] = (xs[rising] - a) / (b - a)
        if d > c:
            falling = (xs > c) & (xs <= d)
            out[falling] = (d - xs[falling]) / (d - c)
        return out


class LinguisticVariable:
    """Named variable over a closed universe with an ordered list of terms.

    Construction validates that term labels are unique, every term's support
    lies inside the universe, and the terms jointly cover the universe (no
    point of a sampling grid has all-zero membership).
    """

    COVERAGE_GRID = 1001

    def __init__(
        self,
        name: str,
        universe: tuple[float, float],
        terms: Sequence[tuple[str, MembershipFunction]],
    ) -> None:
        lo, hi = float(universe[0]), float(universe[1])
        if not lo < hi:
            raise FuzzyDefinitionError(
                f"variable {name!r}: universe must satisfy lo < hi, got [{lo}, {hi}]")
        self.name = str(name)
        self.universe = (lo, hi)
        self.terms: tuple[tuple[str, MembershipFunction], ...] = tuple(
            (str(label), mf) for label, mf in terms)
        if not self.terms:
            raise FuzzyDefinitionError(f"variable {name!r}: needs at least one term")

        labels = [label for label, _ in self.terms]
        if len(set(labels)) != len(labels):
            raise FuzzyDefinitionError(f"variable {name!r}: duplicate term labels in {labels}")
        self._by_label = dict(self.terms)

        for label, mf in self.terms:
            s_lo, s_hi = mf.support
            if s_lo < lo or s_hi > hi:
                raise FuzzyDefinitionError(
                    f"variable {name!r}: term {label!r} support [{s_lo}, {s_hi}] "
                    f"exceeds universe [{lo}, {hi}]")

        grid = np.linspace(lo, hi, self.COVERAGE_GRID)
        cover = np.zeros(grid.shape)
        for _, mf in self.terms:
            cover = np.maximum(cover, mf.degrees(grid))
        if not (cover > 0.0).all():
            gap = grid[int(np.argmin(cover))]
            raise FuzzyDefinitionError(
                f"variable {name!r}: terms do not cover the universe (gap near {gap:g})")

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.terms)

    def term(self, label: str) -> MembershipFunction:
        try:
            return self._by_label[label]
        except KeyError:
            raise FuzzyDefinitionError(
                f"variable {self.name!r} has no term {label!r}") from None

    def fuzzify(self, x: float) -> dict[str, float]:
        """Degrees of every term at the crisp value ``x``."""
        return {label: mf.degree(x) for label, mf in self.terms}

    def __repr__(self) -> str:
        return (f"LinguisticVariable({self.name!r}, universe={self.universe}, "
                f"terms={self.labels()})")


@dataclass(frozen=True)
class FuzzyRule:
    """IF (var IS term) AND ... THEN (var IS term)."""

    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]

    def __post_init__(self) -> None:
        ante = tuple((str(v), str(t)) for v, t in self.antecedent)
        object.__setattr__(self, "antecedent", ante)
        v, t = self.consequent
        object.__setattr__(self, "consequent", (str(v), str(t)))
        if not ante:
            raise FuzzyDefinitionError("rule antecedent must not be empty")


def fire_strength(
    rule: FuzzyRule,
    inputs: Mapping[str, float],
    variables: Mapping[str, LinguisticVariable],
) -> float:
    """Min-conjunction of the rule's antecedent degrees at the crisp inputs.

    Raises:
        FuzzyDefinitionError: an antecedent references an unknown variable/term.
        ValueError: a required input value is missing (names the variable).
    """
    strength = 1.0
    for var_name, term_label in rule.antecedent:
        if var_name not in variables:
            raise FuzzyDefinitionError(f"rule references unknown variable {var_name!r}")
        if var_name not in inputs:
            raise ValueError(f"missing input for variable {var_name!r}")
        degree = variables[var_name].term(term_label).degree(float(inputs[var_name]))
        if degree < strength:
            strength = degree
    return strength


def centroid(xs: Iterable[float], mus: Iterable[float]) -> float:
    """Center of mass sum(x*mu)/sum(mu) of a sampled membership curve.

    Raises ValueError when the mass is all zero (or any mass is negative).
    """
    x = np.asarray(xs, dtype=float)
    mu = np.asarray(mus, dtype=float)
    if x.ndim != 1 or x.shape != mu.shape or x.size == 0:
        raise ValueError("centroid needs matching, non-empty 1-d sample arrays")
    if (mu < 0.0).any():
        raise ValueError("membership mass must be nonnegative")
    total = float(np.sum(mu))
    if total <= 0.0:
        raise ValueError("centroid undefined: all-zero membership mass")
    return float(np.sum(x * mu) / total)


class FuzzyInferenceSystem:
    """Mamdani system: AND = min, implication = clip (min), aggregation = max,
    defuzzification = centroid over ``samples`` uniform points of the output
    universe.

    Deterministic: identical crisp inputs always produce identical output.
    """

    def __init__(
        self,
        inputs: Sequence[LinguisticVariable],
        output: LinguisticVariable,
        rules: Sequence[FuzzyRule],
        samples: int = 1001,
    ) -> None:
        if samples < 3:
            raise FuzzyDefinitionError("need at least 3 output samples")
        self.variables: dict[str, LinguisticVariable] = {}
        for var in inputs:
            if var.name in self.variables:
                raise FuzzyDefinitionError(f"duplicate input variable {var.name!r}")
            self.variables[var.name] = var
        self.output = output
        self.rules: tuple[FuzzyRule, ...] = tuple(rules)
        if not self.rules:
            raise FuzzyDefinitionError("rule list must not be empty")

        for rule in self.rules:
            for var_name, term_label in rule.antecedent:
                if var_name not in self.variables:
                    raise FuzzyDefinitionError(
                        f"rule references unknown input variable {var_name!r}")
                self.variables[var_name].term(term_label)  # existence check
            out_name, out_term = rule.consequent
            if out_name != output.name:
                raise FuzzyDefinitionError(
                    f"rule consequent variable {out_name!r} is not the output "
                    f"{output.name!r}")
            output.term(out_term)

        lo, hi = output.universe
        self._grid = np.linspace(lo, hi, samples)
        self._grid.setflags(write=False)
        self._term_grid: dict[str, np.ndarray] = {}
        for label, mf in output.terms:
            sampled = mf.degrees(self._grid)
            sampled.setflags(write=False)
            self._term_grid[label] = sampled

    @property
    def sample_grid(self) -> np.ndarray:
        return self._grid

    def rule_strengths(self, inputs: Mapping[str, float]) -> np.ndarray:
        """Firing strength of every rule, in rule order."""
        degrees: dict[str, dict[str, float]] = {}
        for name, var in self.variables.items():
            if name not in inputs:
                raise ValueError(f"missing input for variable {name!r}")
            degrees[name] = var.fuzzify(float(inputs[name]))
        strengths = np.empty(len(self.rules))
        for i, rule in enumerate(self.rules):
            strengths[i] = min(degrees[v][t] for v, t in rule.antecedent)
        return strengths

    def evaluate(self, inputs: Mapping[str, float]) -> float:
        """Crisp Mamdani output for the crisp inputs.

        Raises NoRuleFiredError when every rule's strength is zero.
        """
        strengths = self.rule_strengths(inputs)
        # Group by consequent term: clipping each term once at the max
        # strength of its rules is equivalent to clipping per rule and
        # max-aggregating.
        clip_level: dict[str, float] = {}
        for rule, s in zip(self.rules, strengths):
            if s <= 0.0:
                continue
            label = rule.consequent[1]
            if s > clip_level.get(label, 0.0):
                clip_level[label] = s
        if not clip_level:
            raise NoRuleFiredError("no rule fired")
        aggregate = np.zeros(self._grid.shape)
        for label, level in clip_level.items():
            np.maximum(aggregate, np.minimum(self._term_grid[label], level),
                       out=aggregate)
        return centroid(self._grid, aggregate)
