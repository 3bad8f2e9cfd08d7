"""Planar travel-time model.

Travel time over distance d follows the two-regime square-root/linear law:
short responses never reach cruising speed (acceleration-limited,
t = 2*sqrt(d/a)), long ones accelerate and cruise (t = v/a + d/v).  The
crossover distance is d* = v^2/a.  With the default acceleration
a = 0.1 mi/min^2 and cruising speed v = 0.5 mi/min the law is concave in
distance, so direct travel never loses to a detour through a midpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Point, TravelMatrix


@dataclass(frozen=True)
class TravelModel:
    acceleration: float = 0.1  # mi / min^2
    cruise_speed: float = 0.5  # mi / min
    metric: str = "euclidean"  # or "manhattan"

    def __post_init__(self) -> None:
        if self.acceleration <= 0 or self.cruise_speed <= 0:
            raise ValueError("acceleration and cruise speed must be positive")
        if self.metric not in ("euclidean", "manhattan"):
            raise ValueError(f"unknown metric {self.metric!r}")

    @property
    def crossover_distance(self) -> float:
        """Distance d* beyond which the unit reaches cruising speed."""
        return self.cruise_speed**2 / self.acceleration

    def distance(self, a: Point, b: Point) -> float:
        dx = a[0] - b[0]
        dy = a[1] - b[1]
        if self.metric == "manhattan":
            return abs(dx) + abs(dy)
        return math.hypot(dx, dy)

    def time_for_distance(self, d: float) -> float:
        """Travel time in minutes to cover d miles from a standing start."""
        if d < 0:
            raise ValueError("distance must be nonnegative")
        if d <= self.crossover_distance:
            return 2.0 * math.sqrt(d / self.acceleration)
        return self.cruise_speed / self.acceleration + d / self.cruise_speed


def travel_time(model: TravelModel, origin: Point, dest: Point) -> float:
    """Point-to-point travel time in minutes."""
    return model.time_for_distance(model.distance(origin, dest))


def travel_matrix(
    model: TravelModel,
    origins: Sequence[Point],
    dests: Sequence[Point],
) -> TravelMatrix:
    """Travel times for every origin-destination pair (origins x dests)."""
    minutes = np.empty((len(origins), len(dests)), dtype=float)
    for i, o in enumerate(origins):
        for j, d in enumerate(dests):
            minutes[i, j] = travel_time(model, o, d)
    return TravelMatrix(minutes)
