"""Signalized-intersection delay environment.

Average per-vehicle delay for one approach follows the Highway Capacity
Manual control-delay form for a two-phase signal:

    d = 0.38 * C * (1 - lam)^2 / (1 - lam * x)
        + 173 * x^2 * ((x - 1) + sqrt((x - 1)^2 + 16 * x / C))

with C the cycle time (s), lam the green ratio g/C, and x the degree of
saturation v/c.  Delay for the whole intersection is the volume-weighted
mean of the two approach delays.

All functions are pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "MAX_SATURATION_PRODUCT",
    "ApproachState",
    "PhaseSchedule",
    "DelayResult",
    "green_ratio",
    "saturation",
    "hcm_delay",
    "intersection_delay",
]

# The uniform-delay denominator (1 - lam*x) hits zero at full saturation of a
# fully green approach; the product is clamped to keep delays finite while
# preserving monotonicity in both lam and x.
MAX_SATURATION_PRODUCT = 0.99


def green_ratio(green_time: float, cycle_time: float) -> float:
    """Fraction of the cycle that is green for one approach, g/C in (0, 1)."""
    if not 0.0 < green_time < cycle_time:
        raise ValueError(
            f"green time must lie strictly inside (0, {cycle_time}), got {green_time}")
    return green_time / cycle_time


def saturation(volume: float, capacity: float) -> float:
    """Degree of saturation v/c for one approach."""
    if capacity <= 0.0:
        raise ValueError(f"capacity must be positive, got {capacity}")
    if volume < 0.0:
        raise ValueError(f"volume must be nonnegative, got {volume}")
    return volume / capacity


def hcm_delay(cycle_time: float, lam: float, x: float) -> float:
    """Average control delay (seconds per vehicle) for one approach.

    Args:
        cycle_time: signal cycle length C in seconds, > 0.
        lam: green ratio in (0, 1).
        x: degree of saturation, >= 0.

    The product lam*x is clamped to MAX_SATURATION_PRODUCT in the first
    term's denominator, so the result is finite for any admissible input.
    """
    if cycle_time <= 0.0:
        raise ValueError(f"cycle time must be positive, got {cycle_time}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"green ratio must lie in (0, 1), got {lam}")
    if x < 0.0:
        raise ValueError(f"saturation must be nonnegative, got {x}")
    lam_x = min(lam * x, MAX_SATURATION_PRODUCT)
    uniform = 0.38 * cycle_time * (1.0 - lam) ** 2 / (1.0 - lam_x)
    overflow = 173.0 * x * x * ((x - 1.0) + math.sqrt((x - 1.0) ** 2 + 16.0 * x / cycle_time))
    return uniform + overflow


@dataclass(frozen=True)
class ApproachState:
    """One approach of an intersection: demand, capacity, allotted green."""

    volume: float
    capacity: float = 3500.0
    green_time: float = 50.0

    def __post_init__(self) -> None:
        if self.volume < 0.0:
            raise ValueError(f"volume must be nonnegative, got {self.volume}")
        if self.capacity <= 0.0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if self.green_time <= 0.0:
            raise ValueError(f"green time must be positive, got {self.green_time}")


@dataclass(frozen=True)
class PhaseSchedule:
    """Two-phase split of one cycle: green on NS, the remainder green on WE."""

    cycle_time: float
    green_ns: float

    def __post_init__(self) -> None:
        if self.cycle_time <= 0.0:
            raise ValueError(f"cycle time must be positive, got {self.cycle_time}")
        if not 0.0 < self.green_ns < self.cycle_time:
            raise ValueError(
                f"NS green must lie strictly inside (0, {self.cycle_time}), "
                f"got {self.green_ns}")

    @property
    def green_we(self) -> float:
        return self.cycle_time - self.green_ns


@dataclass(frozen=True)
class DelayResult:
    """Per-approach delays plus their volume-weighted combination (seconds)."""

    ns: float
    we: float
    intersection: float


def intersection_delay(
    ns: ApproachState, we: ApproachState, schedule: PhaseSchedule
) -> DelayResult:
    """Delay of both approaches under ``schedule``, combined by volume weight.

    Each approach is evaluated with its own green time; the intersection
    figure is (d_ns*v_ns + d_we*v_we) / (v_ns + v_we), or 0 when both
    approaches are empty.
    """
    d_ns = hcm_delay(
        schedule.cycle_time,
        green_ratio(ns.green_time, schedule.cycle_time),
        saturation(ns.volume, ns.capacity),
    )
    d_we = hcm_delay(
        schedule.cycle_time,
        green_ratio(we.green_time, schedule.cycle_time),
        saturation(we.volume, we.capacity),
    )
    total_volume = ns.volume + we.volume
    if total_volume > 0.0:
        combined = (d_ns * ns.volume + d_we * we.volume) / total_volume
    else:
        combined = 0.0
    return DelayResult(ns=d_ns, we=d_we, intersection=combined)
