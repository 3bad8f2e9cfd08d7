"""Discrete-event evaluation of a solved allocation plan and policy.

Calls arrive as a non-homogeneous Poisson process (thinning against the
maximum modulated rate), draw a node and believed class from the rates,
then an actual class from the condition matrix.  Dispatch follows the
plan; once on scene, actions follow the recourse policy, including the
designated secondary dispatch a few minutes (configurable) after the
first unit arrives.  Every service leg is exponential with mean equal to
its planning-model parameter.

If any policy-recommended unit is busy the call falls back: the closest
idle unit of any type transports the patient to the ED.  If no unit is
idle at all the call is lost.  Calls are never queued; this matches the
loss-system assumption behind the availability constraints.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Action, DIVERTING_ACTIONS, ScenarioInstance
from .plans import AllocationPlan, RecoursePolicy

MINUTES_PER_DAY = 24 * 60.0


class FallbackRule(enum.Enum):
    CLOSEST_AVAILABLE_ED = "closest_available_ed"


def default_profile() -> np.ndarray:
    """Hour-of-day / day-of-week rate multipliers with mean one.

    The daily curve is a piecewise cosine with its trough (0.7x) at 04:00
    and its peak (1.3x) at 18:00; weekends get a flat 1.05x uplift.  The
    grid is normalized so its mean is exactly 1.
    """
    curve = np.empty(24)
    for h in range(24):
        hh = float(h) if h >= 4 else float(h) + 24.0
        if hh <= 18.0:  # rising limb, 04:00 -> 18:00
            curve[h] = 1.0 - 0.3 * math.cos(math.pi * (hh - 4.0) / 14.0)
        else:  # falling limb, 18:00 -> 28:00 (= 04:00 next day)
            curve[h] = 1.0 + 0.3 * math.cos(math.pi * (hh - 18.0) / 10.0)
    day_factor = np.array([1.0] * 5 + [1.05, 1.05])
    grid = np.outer(curve, day_factor)
    return grid / grid.mean()


def flat_profile() -> np.ndarray:
    return np.ones((24, 7))


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls.

    rate_multipliers is a 24 x 7 grid (hour of day x day of week) of
    nonnegative factors with mean 1; assessment_minutes is the on-scene
    delay before a designated secondary unit is requested.  When
    partial_substitution is on, a busy recommended unit may be replaced
    by the closest idle unit of the same type before the full ED-transport
    fallback applies.
    """

    horizon_days: float = 7.0
    replications: int = 100
    seed: int = 0
    rate_multipliers: np.ndarray = field(default_factory=default_profile)
    fallback: FallbackRule = FallbackRule.CLOSEST_AVAILABLE_ED
    assessment_minutes: float = 5.0
    partial_substitution: bool = False

    def __post_init__(self) -> None:
        grid = np.asarray(self.rate_multipliers, dtype=float)
        object.__setattr__(self, "rate_multipliers", grid)
        if self.horizon_days <= 0:
            raise ValueError("horizon must be positive")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if grid.shape != (24, 7):
            raise ValueError("rate multipliers must be a 24 x 7 grid")
        if np.any(grid < 0):
            raise ValueError("rate multipliers must be nonnegative")
        if abs(float(grid.mean()) - 1.0) > 1e-9:
            raise ValueError("rate multipliers must have mean 1")
        if self.assessment_minutes < 0:
            raise ValueError("assessment delay must be nonnegative")


class EventKind(enum.Enum):
    ARRIVAL = "arrival"
    UNIT_FREE = "unit_free"
    SECONDARY_ARRIVAL = "secondary_arrival"


@dataclass(frozen=True)
class SimEvent:
    time: float
    seq: int
    kind: EventKind
    payload: tuple


@dataclass(frozen=True)
class ReplicationStats:
    calls: int
    diversions: int
    ed_transports: int
    fallbacks: int
    unserved: int
    utilization: dict[str, float]

    @property
    def diversion_rate(self) -> float:
        return self.diversions / self.calls if self.calls else 0.0


@dataclass(frozen=True)
class SimulationReport:
    replications: tuple[ReplicationStats, ...]
    horizon_days: float
    seed: int

    @property
    def rates(self) -> np.ndarray:
        return np.array([r.diversion_rate for r in self.replications])

    @property
    def mean_diversion_rate(self) -> float:
        return float(self.rates.mean())

    @property
    def std_error(self) -> float:
        rates = self.rates
        if len(rates) < 2:
            return 0.0
        return float(rates.std(ddof=1) / math.sqrt(len(rates)))

    @property
    def ci95(self) -> tuple[float, float]:
        m = self.mean_diversion_rate
        half = 1.96 * self.std_error
        return (m - half, m + half)

    @property
    def loss_fraction(self) -> float:
        calls = sum(r.calls for r in self.replications)
        lost = sum(r.unserved for r in self.replications)
        return lost / calls if calls else 0.0

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "horizon_days": self.horizon_days,
            "seed": self.seed,
            "replication_count": len(self.replications),
            "mean_diversion_rate": self.mean_diversion_rate,
            "std_error": self.std_error,
            "ci95_low": lo,
            "ci95_high": hi,
            "loss_fraction": self.loss_fraction,
            "replications": [
                {
                    "calls": r.calls,
                    "diversions": r.diversions,
                    "ed_transports": r.ed_transports,
                    "fallbacks": r.fallbacks,
                    "unserved": r.unserved,
                    "mean_utilization": (
                        float(np.mean(list(r.utilization.values())))
                        if r.utilization
                        else 0.0
                    ),
                }
                for r in self.replications
            ],
        }


class _Unit:
    __slots__ = ("uid", "station", "type_id", "type_idx", "busy", "busy_minutes")

    def __init__(self, uid: str, station: int, type_id: str, type_idx: int):
        self.uid = uid
        self.station = station
        self.type_id = type_id
        self.type_idx = type_idx
        self.busy = False
        self.busy_minutes = 0.0


def check_policy(
    instance: ScenarioInstance, plan: AllocationPlan, policy: RecoursePolicy
) -> list[str]:
    """Consistency checks between an instance and a plan/policy pair.

    Dispatch pools must be stocked, and every reachable branch of a
    dispatch entry must resolve the call exactly once across the primary
    actions and the secondary.  (Node, believed) pairs with no dispatch
    entry are legal; such calls run through the fallback.
    """
    problems: list[str] = []
    station_ids = {s.id for s in instance.stations}
    type_ids = {u.id for u in instance.unit_types}
    for (sid, kid), count in plan.units.items():
        if sid not in station_ids or kid not in type_ids:
            problems.append(f"plan allocates unknown pool ({sid}, {kid})")
        if count < 0:
            problems.append(f"negative unit count at ({sid}, {kid})")
    p = instance.condition_model.p
    for (nid, bel), pools in plan.dispatch.items():
        for pool in pools:
            if plan.units.get(pool, 0) < 1:
                problems.append(
                    f"dispatch for ({nid}, {bel}) uses empty pool {pool}"
                )
        try:
            t = instance.believed.index(bel)
        except ValueError:
            problems.append(f"dispatch references unknown believed class {bel!r}")
            continue
        for a, act_name in enumerate(instance.actual):
            if p[t, a] <= 0.0:
                continue
            branch = (nid, bel, act_name)
            actions = policy.primary_actions.get(branch, {})
            satisfiers = sum(
                1 for act in actions.values() if act != Action.SUPPORT.value
            )
            sec = policy.secondary.get(branch)
            if sec is not None and sec[2] != Action.SUPPORT.value:
                satisfiers += 1
            if satisfiers != 1:
                problems.append(
                    f"branch {branch} resolves the call {satisfiers} times"
                )
            for pool in pools:
                if pool not in actions:
                    problems.append(
                        f"dispatched pool {pool} has no action on branch {branch}"
                    )
    return problems


def _arrival_times(
    rng: np.random.Generator,
    total_per_minute: float,
    grid: np.ndarray,
    horizon_minutes: float,
) -> list[float]:
    """Non-homogeneous Poisson arrival times by thinning."""
    if total_per_minute <= 0.0:
        return []
    peak = float(grid.max())
    if peak <= 0.0:
        return []
    lam_max = total_per_minute * peak
    times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / lam_max)
        if t >= horizon_minutes:
            return times
        hour = int(t // 60.0) % 24
        day = int(t // MINUTES_PER_DAY) % 7
        if rng.random() * peak < grid[hour, day]:
            times.append(t)


def simulate(
    instance: ScenarioInstance,
    plan: AllocationPlan,
    policy: RecoursePolicy,
    config: SimConfig | None = None,
) -> SimulationReport:
    """Run replications and aggregate diversion statistics.

    Raises ValueError when the plan/policy is inconsistent with the
    instance (unknown pools, unresolved branches).
    """
    config = config or SimConfig()
    problems = check_policy(instance, plan, policy)
    if problems:
        raise ValueError("; ".join(problems))

    station_idx = {s.id: i for i, s in enumerate(instance.stations)}
    type_index = {u.id: k for k, u in enumerate(instance.unit_types)}
    travel = instance.travel.minutes
    believed = instance.believed
    actual = instance.actual
    p_cum = np.cumsum(instance.condition_model.p, axis=1)

    # flattened (node, believed) arrival categories
    lam = np.array(
        [
            [instance.rate(j, t) for t in range(len(believed))]
            for j in range(instance.n_nodes)
        ]
    )
    lam_total_hr = float(lam.sum())
    cat_cum = (
        np.cumsum(lam.ravel() / lam_total_hr)
        if lam_total_hr > 0
        else np.ones(lam.size)
    )
    horizon_minutes = config.horizon_days * MINUTES_PER_DAY

    unit_template = []
    for (sid, kid), count in sorted(plan.units.items()):
        for slot in range(count):
            unit_template.append((f"{sid}:{kid}:{slot}", station_idx[sid], kid))

    reps = []
    for rep in range(config.replications):
        rng = np.random.default_rng([config.seed, rep])
        units = [
            _Unit(uid, st, kid, type_index[kid])
            for uid, st, kid in unit_template
        ]

        arrivals = _arrival_times(
            rng, lam_total_hr / 60.0, config.rate_multipliers, horizon_minutes
        )
        heap: list[tuple[float, int, SimEvent]] = []
        seq = 0

        def push(time: float, kind: EventKind, payload: tuple) -> None:
            nonlocal seq
            heapq.heappush(heap, (time, seq, SimEvent(time, seq, kind, payload)))
            seq += 1

        for t_arr in arrivals:
            cat = int(np.searchsorted(cat_cum, rng.random(), side="right"))
            cat = min(cat, lam.size - 1)
            j, bel_t = divmod(cat, len(believed))
            a = int(np.searchsorted(p_cum[bel_t], rng.random(), side="right"))
            a = min(a, len(actual) - 1)
            push(t_arr, EventKind.ARRIVAL, (j, bel_t, a))

        calls = diversions = ed_transports = fallbacks = unserved = 0
        last_time = 0.0

        def occupy_interval(unit: _Unit, start: float, end: float) -> None:
            """Mark the unit busy on [start, end) and schedule its release."""
            unit.busy = True
            unit.busy_minutes += max(
                0.0, min(end, horizon_minutes) - min(start, horizon_minutes)
            )
            push(end, EventKind.UNIT_FREE, (unit,))

        def idle_in_pool(sid: str, kid: str) -> _Unit | None:
            i = station_idx[sid]
            for unit in units:
                if unit.station == i and unit.type_id == kid and not unit.busy:
                    return unit
            return None

        def closest_idle(j: int, type_id: str | None = None) -> _Unit | None:
            best = None
            best_t = float("inf")
            for unit in units:
                if unit.busy:
                    continue
                if type_id is not None and unit.type_id != type_id:
                    continue
                t_resp = float(travel[unit.station, j])
                if t_resp < best_t - 1e-12:
                    best, best_t = unit, t_resp
            return best

        def draw_respond(unit: _Unit, action: Action, j: int, a: int) -> float:
            menu = instance.catalog.menu(unit.station, j, unit.type_idx, a)
            mean = next(
                leg.minutes
                for leg in menu.spec(action).legs
                if leg.kind == "respond"
            )
            return rng.exponential(mean) if mean > 0 else 0.0

        def draw_remaining(unit: _Unit, action: Action, j: int, a: int) -> float:
            """Sampled post-arrival service time (all non-respond legs)."""
            menu = instance.catalog.menu(unit.station, j, unit.type_idx, a)
            total = 0.0
            for leg in menu.spec(action).legs:
                if leg.kind == "respond":
                    continue
                total += rng.exponential(leg.minutes) if leg.minutes > 0 else 0.0
            return total

        def run_fallback(now: float, j: int, a: int) -> None:
            nonlocal ed_transports, fallbacks, unserved
            unit = closest_idle(j)
            if unit is None:
                unserved += 1
                return
            fallbacks += 1
            ed_transports += 1
            resp = draw_respond(unit, Action.TRANSPORT_ED, j, a)
            rest = draw_remaining(unit, Action.TRANSPORT_ED, j, a)
            occupy_interval(unit, now, now + resp + rest)

        while heap:
            _, _, ev = heapq.heappop(heap)
            assert ev.time >= last_time - 1e-9
            last_time = max(last_time, ev.time)

            if ev.kind is EventKind.UNIT_FREE:
                ev.payload[0].busy = False
                continue

            if ev.kind is EventKind.ARRIVAL:
                j, bel_t, a = ev.payload
                calls += 1
                nid = instance.demand_nodes[j].id
                bel = believed[bel_t]
                branch = (nid, bel, actual[a])
                pools = plan.dispatch.get((nid, bel), ())
                if not pools:
                    run_fallback(ev.time, j, a)
                    continue
                chosen: list[_Unit] = []
                complete = True
                for sid, kid in pools:
                    unit = idle_in_pool(sid, kid)
                    if unit is None and config.partial_substitution:
                        unit = closest_idle(j, type_id=kid)
                    if unit is None:
                        complete = False
                        break
                    unit.busy = True  # reserve while assembling the response
                    chosen.append(unit)
                if not complete:
                    for unit in chosen:
                        unit.busy = False
                    run_fallback(ev.time, j, a)
                    continue

                actions = policy.primary_actions[branch]
                respond_draws = [
                    draw_respond(unit, Action(actions[pool]), j, a)
                    for unit, pool in zip(chosen, pools)
                ]

                if policy.secondary.get(branch) is None:
                    satisfier = None
                    for pos, (unit, pool) in enumerate(zip(chosen, pools)):
                        act = Action(actions[pool])
                        if act is not Action.SUPPORT:
                            satisfier = act
                        rest = draw_remaining(unit, act, j, a)
                        occupy_interval(
                            unit, ev.time, ev.time + respond_draws[pos] + rest
                        )
                    if satisfier in DIVERTING_ACTIONS:
                        diversions += 1
                    else:
                        ed_transports += 1
                else:
                    # defer resolution until the secondary is requested;
                    # the chosen units stay reserved meanwhile
                    t_assess = (
                        ev.time + min(respond_draws) + config.assessment_minutes
                    )
                    push(
                        t_assess,
                        EventKind.SECONDARY_ARRIVAL,
                        (
                            j,
                            a,
                            branch,
                            tuple(pools),
                            tuple(chosen),
                            tuple(respond_draws),
                            ev.time,
                        ),
                    )
                continue

            # secondary request: consult the designated recourse pool
            j, a, branch, pools, chosen, respond_draws, t_call = ev.payload
            sec_sid, sec_kid, sec_action = policy.secondary[branch]
            actions = policy.primary_actions[branch]
            sec_unit = idle_in_pool(sec_sid, sec_kid)
            if sec_unit is not None:
                act_s = Action(sec_action)
                sec_resp = draw_respond(sec_unit, act_s, j, a)
                sec_rest = draw_remaining(sec_unit, act_s, j, a)
                occupy_interval(
                    sec_unit, ev.time, ev.time + sec_resp + sec_rest
                )
                handover = ev.time + sec_resp
                for pos, (unit, pool) in enumerate(zip(chosen, pools)):
                    rest = draw_remaining(unit, Action(actions[pool]), j, a)
                    free_at = max(t_call + respond_draws[pos], handover) + rest
                    occupy_interval(unit, t_call, free_at)
                if act_s in DIVERTING_ACTIONS:
                    diversions += 1
                else:
                    ed_transports += 1
            else:
                # recourse unit unavailable: the first on-scene unit
                # defaults to an ED transport
                fallbacks += 1
                ed_transports += 1
                for pos, (unit, pool) in enumerate(zip(chosen, pools)):
                    act = Action.TRANSPORT_ED if pos == 0 else Action(actions[pool])
                    rest = draw_remaining(unit, act, j, a)
                    free_at = max(t_call + respond_draws[pos], ev.time) + rest
                    occupy_interval(unit, t_call, free_at)

        if calls != diversions + ed_transports + unserved:
            raise AssertionError("conservation violated in replication")
        utilization = {
            unit.uid: min(1.0, unit.busy_minutes / horizon_minutes)
            for unit in units
        }
        reps.append(
            ReplicationStats(
                calls=calls,
                diversions=diversions,
                ed_transports=ed_transports,
                fallbacks=fallbacks,
                unserved=unserved,
                utilization=utilization,
            )
        )

    return SimulationReport(
        replications=tuple(reps),
        horizon_days=config.horizon_days,
        seed=config.seed,
    )
