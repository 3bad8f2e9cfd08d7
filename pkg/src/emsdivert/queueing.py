"""Erlang-loss availability machinery.

Stations are modeled as M/G/d/d loss systems: with d units posted and
offered load rho erlangs, the probability that all units are busy is the
Erlang B formula, which depends on the service distribution only through
its mean.  The planning model needs the inverse map: the largest offered
load a d-unit station can carry while keeping blocking at or below alpha.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

#: Default largest station size tabulated by capacity_schedule.
D_MAX_DEFAULT = 50


def erlang_b(d: int, rho: float) -> float:
    """Blocking probability of an M/G/d/d system offered rho erlangs.

    Uses the standard recurrence B_0 = 1,
    B_d = rho * B_{d-1} / (d + rho * B_{d-1}), which is numerically stable
    for all rho >= 0 (every iterate stays in [0, 1]).
    """
    if d < 0:
        raise ValueError("server count d must be nonnegative")
    if rho < 0:
        raise ValueError("offered load rho must be nonnegative")
    b = 1.0
    for n in range(1, d + 1):
        b = rho * b / (n + rho * b)
    return b


def max_traffic_intensity(
    alpha: float, d: int, tol: float = 1e-9, max_iter: int = 200
) -> float:
    """Largest rho with erlang_b(d, rho) <= alpha (rho_alpha(d)).

    B(d, .) is continuous and strictly increasing on (0, inf) with
    B(d, 0) = 0, so the root of B(d, rho) = alpha is found by bisection.
    The initial upper bracket d / alpha works because a system offered
    rho > d loses at least the excess fraction (rho - d) / rho, which at
    rho = d / alpha equals 1 - alpha >= alpha for alpha <= 1/2; a doubling
    fallback covers larger alpha.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if d < 0:
        raise ValueError("server count d must be nonnegative")
    if d == 0:
        return 0.0

    hi = d / alpha
    while erlang_b(d, hi) < alpha:  # pragma: no cover - alpha > 1/2 guard
        hi *= 2.0
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if erlang_b(d, mid) <= alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return lo


@dataclass(frozen=True)
class CapacitySchedule:
    """Tabulated rho_alpha(d) for d = 0..d_max and its marginal gains.

    marginal[d] = rho_alpha(d) - rho_alpha(d-1) is the extra offered load
    the d-th unit at a station can absorb; these are the allocation-variable
    coefficients of the availability constraints.  The marginals start far
    below 1 erlang per unit and grow toward it as pooling improves, which
    is why concentrating units pays.
    """

    alpha: float
    rho: tuple[float, ...]  # rho[d], d = 0..d_max; rho[0] = 0

    @property
    def d_max(self) -> int:
        return len(self.rho) - 1

    @property
    def marginal(self) -> tuple[float, ...]:
        """marginal[d] for d = 1..d_max (index 0 holds marginal of unit 1)."""
        return tuple(
            self.rho[d] - self.rho[d - 1] for d in range(1, len(self.rho))
        )

    def capacity(self, d: int) -> float:
        if d > self.d_max:
            raise ValueError(f"d={d} exceeds tabulated d_max={self.d_max}")
        return self.rho[d]

    def units_needed(self, load: float) -> int:
        """Smallest d whose capacity covers the given offered load."""
        idx = bisect.bisect_left(self.rho, load)
        if idx > self.d_max:
            raise ValueError(
                f"load {load:.4g} exceeds capacity of d_max={self.d_max} units"
            )
        return idx


def capacity_schedule(
    alpha: float, d_max: int = D_MAX_DEFAULT, tol: float = 1e-9
) -> CapacitySchedule:
    """Tabulate rho_alpha(d) for d = 0..d_max."""
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    rho = [0.0]
    for d in range(1, d_max + 1):
        rho.append(max_traffic_intensity(alpha, d, tol=tol))
    arr = np.asarray(rho)
    if np.any(np.diff(arr) <= 0):  # pragma: no cover - sanity guard
        raise AssertionError("capacity schedule must be strictly increasing")
    return CapacitySchedule(alpha=alpha, rho=tuple(rho))
