"""Core problem-instance types for ambulance allocation planning.

A scenario instance bundles the region (stations, demand nodes, treatment
facilities), the fleet (unit types with capabilities and counts), the
condition model (believed / actual condition classes and the conditional
probability matrix linking them), travel times, and the per-pair action
catalog with mean service times.  Everything downstream (model builder,
solver, simulator) consumes instances through this module.

Rates are stored in calls per hour; all times are minutes; all distances
are miles.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace as dc_replace
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .actions import ServiceTimeConstants
    from .geometry import TravelModel

Point = tuple[float, float]

#: Separator used inside structured variable keys; ids must not contain it.
KEY_SEP = ":"


class Capability(enum.Enum):
    """What a unit type can do beyond the traditional ED transport."""

    TRADITIONAL = "traditional"
    DIVERSION_CAPABLE = "diversion_capable"


class Action(enum.Enum):
    """On-scene actions a dispatched unit can take for a patient."""

    TRANSPORT_ED = "transport_ed"
    TRANSPORT_AD = "transport_ad"
    TREAT_IN_PLACE = "treat_in_place"
    SUPPORT = "support"


#: Actions that count as ED diversions when they satisfy a call.
DIVERTING_ACTIONS = (Action.TRANSPORT_AD, Action.TREAT_IN_PLACE)

# Default condition class names.  Believed classes come from telephone
# screening of the caller; actual classes are revealed on scene.
BELIEVED_DEFAULT = ("likely_eligible", "likely_not_eligible")
ACTUAL_DEFAULT = ("ed", "ad", "tip")


@dataclass(frozen=True)
class UnitType:
    """A fleet segment: identical units sharing one capability level.

    fleet_size is the total number of units of this type available for
    allocation across all stations (the N_k budget).
    """

    id: str
    capability: Capability
    fleet_size: int


@dataclass(frozen=True)
class Station:
    id: str
    position: Point


@dataclass(frozen=True)
class DemandNode:
    """A demand cell with arrival rates per believed condition class.

    rates_per_hour aligns with ConditionModel.believed order.
    """

    id: str
    position: Point
    rates_per_hour: tuple[float, ...]


@dataclass(frozen=True)
class ConditionModel:
    """Believed and actual condition classes and their link matrix.

    p[t, a] is the probability that a call believed to be in class
    believed[t] turns out, on scene, to be in actual class actual[a].
    Rows are stochastic.  renormalization_notes records any adjustment
    applied when loading published rows that do not sum to exactly 1.
    """

    believed: tuple[str, ...]
    actual: tuple[str, ...]
    p: np.ndarray
    renormalization_notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    def row(self, believed_name: str) -> np.ndarray:
        return self.p[self.believed.index(believed_name)]


def renormalize_rows(
    rows: Sequence[Sequence[float]], labels: Sequence[str]
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Scale each row to sum exactly to 1, noting any row that needed it.

    Published probability tables are rounded to three decimals and some
    rows sum to 0.999; proportional renormalization keeps the ratios.
    """
    mat = np.asarray(rows, dtype=float)
    notes = []
    for idx, label in enumerate(labels):
        s = float(mat[idx].sum())
        if s <= 0.0:
            raise ValueError(f"condition row {label!r} has nonpositive mass")
        if abs(s - 1.0) > 1e-12:
            mat[idx] = mat[idx] / s
            notes.append(f"row {label!r} rescaled from sum {s:.6g} to 1")
    return mat, tuple(notes)


def urban_condition_model() -> ConditionModel:
    """Screened condition matrix calibrated for urban-type regions."""
    rows = [
        (0.627, 0.019, 0.354),  # likely_eligible
        (0.932, 0.004, 0.063),  # likely_not_eligible
    ]
    p, notes = renormalize_rows(rows, BELIEVED_DEFAULT)
    return ConditionModel(BELIEVED_DEFAULT, ACTUAL_DEFAULT, p, notes)


def rural_condition_model() -> ConditionModel:
    """Screened condition matrix calibrated for rural-type regions."""
    rows = [
        (0.612, 0.026, 0.362),  # likely_eligible
        (0.942, 0.004, 0.054),  # likely_not_eligible
    ]
    p, notes = renormalize_rows(rows, BELIEVED_DEFAULT)
    return ConditionModel(BELIEVED_DEFAULT, ACTUAL_DEFAULT, p, notes)


#: Share of screened calls per believed class, aligned with BELIEVED_DEFAULT.
URBAN_BELIEVED_SHARES = (0.297, 0.703)
RURAL_BELIEVED_SHARES = (0.311, 0.689)


@dataclass(frozen=True)
class ServiceLeg:
    """One component of an action's service time (mean minutes).

    kind is one of respond / on_scene / transfer / return_to_station;
    the simulator samples each leg independently.
    """

    kind: str
    minutes: float


@dataclass(frozen=True)
class ActionSpec:
    action: Action
    legs: tuple[ServiceLeg, ...]

    @property
    def minutes(self) -> float:
        """Total mean service time q for this action."""
        return sum(leg.minutes for leg in self.legs)


@dataclass(frozen=True)
class ActionMenu:
    """Feasible actions for one (station, node, unit type, actual class).

    satisfying is the subset of action values that resolve the call
    (M-prime); diverting is the subset of satisfying actions that count as
    ED diversions (M-double-prime).  Support is always feasible and never
    satisfying.
    """

    specs: tuple[ActionSpec, ...]
    satisfying: frozenset[Action]
    diverting: frozenset[Action]

    def spec(self, action: Action) -> ActionSpec:
        for s in self.specs:
            if s.action is action:
                return s
        raise KeyError(action)

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(s.action for s in self.specs)


@dataclass(frozen=True)
class ActionCatalog:
    """Action menus keyed by (station idx, node idx, unit type idx, actual idx)."""

    menus: Mapping[tuple[int, int, int, int], ActionMenu]

    def menu(self, i: int, j: int, k: int, actual_idx: int) -> ActionMenu:
        return self.menus[(i, j, k, actual_idx)]


@dataclass(frozen=True)
class TravelMatrix:
    """Station-to-node travel times in minutes (stations x nodes)."""

    minutes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "minutes", np.asarray(self.minutes, dtype=float))


@dataclass(frozen=True)
class ScenarioInstance:
    """A complete planning problem.

    coverage_threshold is the response-time bound (minutes) used by the
    optional coverage constraints; alpha is the admissible blocking
    probability for the availability guarantee.
    """

    name: str
    stations: tuple[Station, ...]
    demand_nodes: tuple[DemandNode, ...]
    unit_types: tuple[UnitType, ...]
    condition_model: ConditionModel
    travel: TravelMatrix
    catalog: ActionCatalog
    ed_facilities: tuple[Point, ...]
    ad_facilities: tuple[Point, ...]
    travel_model: "TravelModel"
    service_constants: "ServiceTimeConstants"
    alpha: float = 0.05
    coverage_threshold: float = 15.0
    include_return_leg: bool = True
    meta: Mapping[str, object] = field(default_factory=dict)

    # -- convenience accessors used throughout the builders -------------
    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_nodes(self) -> int:
        return len(self.demand_nodes)

    @property
    def n_types(self) -> int:
        return len(self.unit_types)

    @property
    def believed(self) -> tuple[str, ...]:
        return self.condition_model.believed

    @property
    def actual(self) -> tuple[str, ...]:
        return self.condition_model.actual

    def rate(self, j: int, t: int) -> float:
        """Arrival rate (per hour) at node j for believed class index t."""
        return self.demand_nodes[j].rates_per_hour[t]

    def total_rate_per_hour(self) -> float:
        return float(
            sum(sum(node.rates_per_hour) for node in self.demand_nodes)
        )

    def replace(self, **kwargs) -> "ScenarioInstance":
        return dc_replace(self, **kwargs)


def _check_ids(items: Iterable[str], what: str, violations: list[str]) -> None:
    seen = set()
    for item_id in items:
        if not item_id:
            violations.append(f"{what} id must be nonempty")
        if KEY_SEP in item_id:
            violations.append(f"{what} id {item_id!r} contains reserved {KEY_SEP!r}")
        if item_id in seen:
            violations.append(f"duplicate {what} id {item_id!r}")
        seen.add(item_id)


def validate(instance: ScenarioInstance) -> list[str]:
    """Check instance invariants; returns a list of violations (empty = valid)."""
    v: list[str] = []
    if not instance.stations:
        v.append("instance has no stations")
    if not instance.demand_nodes:
        v.append("instance has no demand nodes")
    if not instance.unit_types:
        v.append("instance has no unit types")
    _check_ids((s.id for s in instance.stations), "station", v)
    _check_ids((n.id for n in instance.demand_nodes), "node", v)
    _check_ids((u.id for u in instance.unit_types), "unit type", v)

    cm = instance.condition_model
    if cm.p.shape != (len(cm.believed), len(cm.actual)):
        v.append(
            f"condition matrix shape {cm.p.shape} does not match "
            f"{len(cm.believed)} believed x {len(cm.actual)} actual classes"
        )
    else:
        if np.any(cm.p < -1e-12) or np.any(cm.p > 1 + 1e-12):
            v.append("condition matrix entries must lie in [0, 1]")
        row_sums = cm.p.sum(axis=1)
        for t, s in enumerate(row_sums):
            if abs(s - 1.0) > 1e-9:
                v.append(
                    f"condition row {cm.believed[t]!r} sums to {s!r}, expected 1"
                )

    for u in instance.unit_types:
        if u.fleet_size < 0:
            v.append(f"unit type {u.id!r} has negative fleet size")
    if all(u.fleet_size == 0 for u in instance.unit_types):
        v.append("total fleet size is zero; no demand can be satisfied")

    for node in instance.demand_nodes:
        if len(node.rates_per_hour) != len(cm.believed):
            v.append(
                f"node {node.id!r} has {len(node.rates_per_hour)} rates for "
                f"{len(cm.believed)} believed classes"
            )
        if any(r < 0 or not math.isfinite(r) for r in node.rates_per_hour):
            v.append(f"node {node.id!r} has a negative or non-finite rate")

    tm = instance.travel.minutes
    if tm.shape != (instance.n_stations, instance.n_nodes):
        v.append(
            f"travel matrix shape {tm.shape} does not match "
            f"{instance.n_stations} stations x {instance.n_nodes} nodes"
        )
    elif np.any(~np.isfinite(tm)) or np.any(tm < 0):
        v.append("travel matrix entries must be finite and nonnegative")

    if not instance.ed_facilities:
        v.append("instance has no ED facility; ED transport is impossible")

    if not (0 < instance.alpha < 1):
        v.append(f"alpha {instance.alpha!r} must lie in (0, 1)")
    if instance.coverage_threshold <= 0:
        v.append("coverage threshold must be positive")

    # every (i, j, k, actual) pair needs a menu with at least one
    # satisfying action, else the stage-two balance is unsatisfiable
    if tm.shape == (instance.n_stations, instance.n_nodes):
        for i in range(instance.n_stations):
            for j in range(instance.n_nodes):
                for k in range(instance.n_types):
                    for a in range(len(cm.actual)):
                        menu = instance.catalog.menus.get((i, j, k, a))
                        if menu is None:
                            v.append(
                                f"catalog is missing menu for station "
                                f"{instance.stations[i].id!r}, node "
                                f"{instance.demand_nodes[j].id!r}, type "
                                f"{instance.unit_types[k].id!r}, actual "
                                f"{cm.actual[a]!r}"
                            )
                        elif not menu.satisfying:
                            v.append(
                                f"menu for ({instance.stations[i].id}, "
                                f"{instance.demand_nodes[j].id}, "
                                f"{instance.unit_types[k].id}, {cm.actual[a]}) "
                                "has no satisfying action"
                            )
    return v
