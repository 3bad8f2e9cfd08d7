"""Solution containers: allocation plans and recourse policies.

extract_solution turns a raw variable assignment back into operational
terms: how many units of each type sit at each station, which pools
respond initially to each (node, believed condition) pair, what action
each responding pool takes once the actual condition is revealed, and
which pool (if any) is dispatched as a secondary.  The derived service
times reproduce the busy-time accounting used by the availability
constraints.

All keys use entity ids (strings) so plans serialize to JSON and survive
round trips independently of index layouts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .domain import Action, ScenarioInstance
from .model import VariableIndex

PoolKey = tuple[str, str]  # (station id, unit type id)
BranchKey = tuple[str, str, str]  # (node id, believed, actual)


class ExtractError(ValueError):
    pass


@dataclass
class AllocationPlan:
    """First-stage decisions: unit counts and initial dispatch pools."""

    units: dict[PoolKey, int]
    dispatch: dict[tuple[str, str], tuple[PoolKey, ...]]

    def count(self, station_id: str, type_id: str) -> int:
        return self.units.get((station_id, type_id), 0)

    def total_units(self) -> int:
        return sum(self.units.values())


@dataclass
class RecoursePolicy:
    """Second-stage decisions per (node, believed, actual) branch.

    primary_actions[branch][pool] is the action value that pool takes;
    secondary[branch] is the (station, type, action) triple of the single
    secondary dispatch, when the strategy uses one; service minutes are
    the derived busy times backing the availability accounting.
    """

    primary_actions: dict[BranchKey, dict[PoolKey, str]]
    secondary: dict[BranchKey, tuple[str, str, str] | None]
    primary_minutes: dict[BranchKey, dict[PoolKey, float]] = field(
        default_factory=dict
    )
    secondary_minutes: dict[BranchKey, float] = field(default_factory=dict)


def _is_one(value: float, tol: float) -> bool:
    return abs(value - 1.0) <= tol


def extract_solution(
    instance: ScenarioInstance,
    index: VariableIndex,
    assignment: np.ndarray,
    tol: float = 1e-6,
) -> tuple[AllocationPlan, RecoursePolicy]:
    """Decode a variable assignment into an allocation plan and policy.

    Checks internal consistency: allocation ordering, exactly one chosen
    action per dispatched pool and branch, at most one secondary per
    branch, and (when service-time variables are present) that assigned
    busy times dominate the derived lower bounds.
    """
    x = np.asarray(assignment, dtype=float)
    believed = instance.believed
    actual = instance.actual
    station_ids = [s.id for s in instance.stations]
    node_ids = [n.id for n in instance.demand_nodes]
    type_ids = [u.id for u in instance.unit_types]
    station_idx = {s: i for i, s in enumerate(station_ids)}
    node_idx = {n: j for j, n in enumerate(node_ids)}
    type_idx = {t: k for k, t in enumerate(type_ids)}

    units: dict[PoolKey, int] = {}
    for key, vid in index.by_prefix("z"):
        _, sid, kid, _n = key.split(":")
        if _is_one(x[vid], tol):
            units[(sid, kid)] = units.get((sid, kid), 0) + 1

    dispatch: dict[tuple[str, str], list[PoolKey]] = {}
    for key, vid in index.by_prefix("y"):
        _, sid, nid, kid, bel = key.split(":")
        if _is_one(x[vid], tol):
            dispatch.setdefault((nid, bel), []).append((sid, kid))
            if units.get((sid, kid), 0) < 1:
                raise ExtractError(
                    f"dispatch {key} uses pool ({sid}, {kid}) with no units"
                )

    primary_actions: dict[BranchKey, dict[PoolKey, str]] = {}
    primary_minutes: dict[BranchKey, dict[PoolKey, float]] = {}
    for key, vid in index.by_prefix("x"):
        _, sid, nid, kid, bel, act_name, action = key.split(":")
        if _is_one(x[vid], tol):
            branch = (nid, bel, act_name)
            pool = (sid, kid)
            chosen = primary_actions.setdefault(branch, {})
            if pool in chosen:
                raise ExtractError(
                    f"pool {pool} has two actions on branch {branch}"
                )
            chosen[pool] = action
            i = station_idx[sid]
            j = node_idx[nid]
            k = type_idx[kid]
            a = actual.index(act_name)
            menu = instance.catalog.menu(i, j, k, a)
            primary_minutes.setdefault(branch, {})[pool] = menu.spec(
                Action(action)
            ).minutes

    secondary: dict[BranchKey, tuple[str, str, str] | None] = {}
    secondary_minutes: dict[BranchKey, float] = {}
    yh_active: dict[BranchKey, PoolKey] = {}
    for key, vid in index.by_prefix("yh"):
        _, sid, nid, kid, bel, act_name = key.split(":")
        if _is_one(x[vid], tol):
            branch = (nid, bel, act_name)
            if branch in yh_active:
                raise ExtractError(f"two secondary dispatches on branch {branch}")
            yh_active[branch] = (sid, kid)
    for key, vid in index.by_prefix("xh"):
        _, sid, nid, kid, bel, act_name, action = key.split(":")
        if _is_one(x[vid], tol):
            branch = (nid, bel, act_name)
            pool = yh_active.get(branch)
            if pool != (sid, kid):
                raise ExtractError(
                    f"secondary action {key} without matching dispatch"
                )
            secondary[branch] = (sid, kid, action)
            i = station_idx[sid]
            j = node_idx[nid]
            k = type_idx[kid]
            a = actual.index(act_name)
            menu = instance.catalog.menu(i, j, k, a)
            secondary_minutes[branch] = menu.spec(Action(action)).minutes
    for branch, pool in yh_active.items():
        if branch not in secondary:
            raise ExtractError(
                f"secondary dispatch on branch {branch} chose no action"
            )

    # every dispatched pool must have exactly one action per branch
    p = instance.condition_model.p
    for (nid, bel), pools in dispatch.items():
        t = believed.index(bel)
        for a, act_name in enumerate(actual):
            if p[t, a] <= 0.0:
                continue
            branch = (nid, bel, act_name)
            chosen = primary_actions.get(branch, {})
            for pool in pools:
                if pool not in chosen:
                    raise ExtractError(
                        f"dispatched pool {pool} has no action on branch {branch}"
                    )

    # add the secondary-wait component to derived primary busy times and
    # check assigned service times dominate the derived floor
    travel = instance.travel.minutes
    for branch, per_pool in primary_minutes.items():
        nid, bel, act_name = branch
        sec = secondary.get(branch)
        wait = 0.0
        if sec is not None:
            wait = float(travel[station_idx[sec[0]], node_idx[nid]])
        for pool in per_pool:
            per_pool[pool] += wait

    has_tau = any(True for _ in index.by_prefix("tau"))
    if has_tau:
        for key, vid in index.by_prefix("tau"):
            _, sid, nid, kid, bel, act_name = key.split(":")
            branch = (nid, bel, act_name)
            floor = primary_minutes.get(branch, {}).get((sid, kid))
            if floor is not None and x[vid] < floor - 1e-6:
                raise ExtractError(
                    f"assigned service time {key}={x[vid]!r} below derived "
                    f"floor {floor!r}"
                )

    plan = AllocationPlan(
        units=dict(sorted(units.items())),
        dispatch={
            key: tuple(sorted(pools)) for key, pools in sorted(dispatch.items())
        },
    )
    policy = RecoursePolicy(
        primary_actions={k: dict(sorted(v.items())) for k, v in sorted(primary_actions.items())},
        secondary=dict(sorted(secondary.items())),
        primary_minutes={k: dict(sorted(v.items())) for k, v in sorted(primary_minutes.items())},
        secondary_minutes=dict(sorted(secondary_minutes.items())),
    )
    return plan, policy


# ---- JSON round trip ----------------------------------------------------

def plan_to_dict(plan: AllocationPlan, policy: RecoursePolicy) -> dict:
    return {
        "units": [
            {"station": sid, "type": kid, "count": count}
            for (sid, kid), count in sorted(plan.units.items())
        ],
        "dispatch": [
            {
                "node": nid,
                "believed": bel,
                "pools": [
                    {"station": sid, "type": kid} for sid, kid in pools
                ],
            }
            for (nid, bel), pools in sorted(plan.dispatch.items())
        ],
        "primary_actions": [
            {
                "node": nid,
                "believed": bel,
                "actual": act_name,
                "actions": [
                    {
                        "station": sid,
                        "type": kid,
                        "action": action,
                        "minutes": policy.primary_minutes.get(
                            (nid, bel, act_name), {}
                        ).get((sid, kid)),
                    }
                    for (sid, kid), action in sorted(chosen.items())
                ],
            }
            for (nid, bel, act_name), chosen in sorted(
                policy.primary_actions.items()
            )
        ],
        "secondary": [
            {
                "node": nid,
                "believed": bel,
                "actual": act_name,
                "station": sec[0],
                "type": sec[1],
                "action": sec[2],
                "minutes": policy.secondary_minutes.get((nid, bel, act_name)),
            }
            for (nid, bel, act_name), sec in sorted(policy.secondary.items())
            if sec is not None
        ],
    }


def plan_from_dict(data: Mapping) -> tuple[AllocationPlan, RecoursePolicy]:
    units = {
        (rec["station"], rec["type"]): int(rec["count"])
        for rec in data.get("units", [])
    }
    dispatch = {
        (rec["node"], rec["believed"]): tuple(
            (p["station"], p["type"]) for p in rec["pools"]
        )
        for rec in data.get("dispatch", [])
    }
    primary_actions: dict[BranchKey, dict[PoolKey, str]] = {}
    primary_minutes: dict[BranchKey, dict[PoolKey, float]] = {}
    for rec in data.get("primary_actions", []):
        branch = (rec["node"], rec["believed"], rec["actual"])
        primary_actions[branch] = {
            (a["station"], a["type"]): a["action"] for a in rec["actions"]
        }
        primary_minutes[branch] = {
            (a["station"], a["type"]): float(a["minutes"])
            for a in rec["actions"]
            if a.get("minutes") is not None
        }
    secondary: dict[BranchKey, tuple[str, str, str] | None] = {}
    secondary_minutes: dict[BranchKey, float] = {}
    for rec in data.get("secondary", []):
        branch = (rec["node"], rec["believed"], rec["actual"])
        secondary[branch] = (rec["station"], rec["type"], rec["action"])
        if rec.get("minutes") is not None:
            secondary_minutes[branch] = float(rec["minutes"])
    plan = AllocationPlan(units=units, dispatch=dispatch)
    policy = RecoursePolicy(
        primary_actions=primary_actions,
        secondary=secondary,
        primary_minutes=primary_minutes,
        secondary_minutes=secondary_minutes,
    )
    return plan, policy


def save_plan(
    path: str, plan: AllocationPlan, policy: RecoursePolicy, header: Mapping | None = None
) -> None:
    doc = dict(header or {})
    doc["plan"] = plan_to_dict(plan, policy)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_plan(path: str) -> tuple[AllocationPlan, RecoursePolicy, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    plan, policy = plan_from_dict(doc.get("plan", doc))
    header = {k: v for k, v in doc.items() if k != "plan"}
    return plan, policy, header
