"""Action catalog generation and mean service-time derivation.

The feasible action set for a (station, node, unit type, actual condition)
pair comes from three rules:

* capability: traditional units can only transport to the ED; diversion
  capable units can also transport to an alternative destination (AD) or
  treat in place (TIP) when the patient's actual condition allows it;
* condition hierarchy: a TIP-appropriate patient may also be taken to an
  AD or the ED, and an AD-appropriate patient may also go to the ED, but
  never the other way around;
* facility reachability: transport actions require a facility of the
  matching kind to exist in the region.

Support (assist on scene, no patient disposition) is always feasible and
never satisfies the call.  The satisfying subset of the diversion-capable
menus that avoids the ED is the diverting set used by the objective.
"""
from __future__ import annotations

from dataclasses import dataclass

from .domain import (
    Action,
    ActionCatalog,
    ActionMenu,
    ActionSpec,
    Capability,
    ConditionModel,
    DemandNode,
    Point,
    ServiceLeg,
    Station,
    TravelMatrix,
    UnitType,
)
from .geometry import TravelModel, travel_time


@dataclass(frozen=True)
class ServiceTimeConstants:
    """Mean non-travel service components in minutes.

    The transport constants cover on-scene care plus handover at the
    destination; treat-in-place covers the full on-scene episode; support
    is the assist time for a unit that hands the patient to another crew.
    """

    ed_minutes: float = 49.0
    ad_minutes: float = 43.0
    tip_minutes: float = 45.0
    support_minutes: float = 5.0

    def scene_minutes(self, action: Action) -> float:
        return {
            Action.TRANSPORT_ED: self.ed_minutes,
            Action.TRANSPORT_AD: self.ad_minutes,
            Action.TREAT_IN_PLACE: self.tip_minutes,
            Action.SUPPORT: self.support_minutes,
        }[action]


def nearest_facility(
    model: TravelModel, origin: Point, facilities: tuple[Point, ...]
) -> tuple[int, float]:
    """Index of and travel time to the closest facility (ties: lowest index)."""
    best_idx = -1
    best_t = float("inf")
    for idx, fac in enumerate(facilities):
        t = travel_time(model, origin, fac)
        if t < best_t - 1e-12:
            best_idx, best_t = idx, t
    if best_idx < 0:
        raise ValueError("no facility available")
    return best_idx, best_t


def action_time_legs(
    action: Action,
    response_minutes: float,
    node_pos: Point,
    station_pos: Point,
    ed_facilities: tuple[Point, ...],
    ad_facilities: tuple[Point, ...],
    constants: ServiceTimeConstants,
    travel_model: TravelModel,
    include_return_leg: bool = True,
) -> tuple[ServiceLeg, ...]:
    """Service-time legs for one action executed from a given station.

    Transports drive to the nearest matching facility and return to the
    station from there; treat-in-place and support return from the scene.
    """
    legs = [ServiceLeg("respond", response_minutes)]
    legs.append(ServiceLeg("on_scene", constants.scene_minutes(action)))
    if action is Action.TRANSPORT_ED:
        fac_idx, to_fac = nearest_facility(travel_model, node_pos, ed_facilities)
        legs.append(ServiceLeg("transfer", to_fac))
        return_from = ed_facilities[fac_idx]
    elif action is Action.TRANSPORT_AD:
        fac_idx, to_fac = nearest_facility(travel_model, node_pos, ad_facilities)
        legs.append(ServiceLeg("transfer", to_fac))
        return_from = ad_facilities[fac_idx]
    else:
        return_from = node_pos
    if include_return_leg:
        legs.append(
            ServiceLeg(
                "return_to_station",
                travel_time(travel_model, return_from, station_pos),
            )
        )
    return tuple(legs)


def _menu_actions(
    capability: Capability,
    actual_name: str,
    have_ad: bool,
) -> tuple[tuple[Action, ...], tuple[Action, ...]]:
    """(satisfying M', diverting M'') for one capability/actual pair."""
    if capability is Capability.TRADITIONAL:
        return (Action.TRANSPORT_ED,), ()
    if actual_name == "ed":
        return (Action.TRANSPORT_ED,), ()
    if actual_name == "ad":
        if not have_ad:
            return (Action.TRANSPORT_ED,), ()
        return (Action.TRANSPORT_AD, Action.TRANSPORT_ED), (Action.TRANSPORT_AD,)
    if actual_name == "tip":
        satisfying = [Action.TREAT_IN_PLACE]
        diverting = [Action.TREAT_IN_PLACE]
        if have_ad:
            satisfying.append(Action.TRANSPORT_AD)
            diverting.append(Action.TRANSPORT_AD)
        satisfying.append(Action.TRANSPORT_ED)
        return tuple(satisfying), tuple(diverting)
    raise ValueError(f"unknown actual condition class {actual_name!r}")


def build_catalog(
    stations: tuple[Station, ...],
    nodes: tuple[DemandNode, ...],
    unit_types: tuple[UnitType, ...],
    condition_model: ConditionModel,
    travel: TravelMatrix,
    ed_facilities: tuple[Point, ...],
    ad_facilities: tuple[Point, ...],
    constants: ServiceTimeConstants,
    travel_model: TravelModel,
    include_return_leg: bool = True,
) -> ActionCatalog:
    """Derive the full action catalog with mean service times.

    Raises ValueError when no ED facility exists (every region needs one;
    a missing AD network merely removes AD transports from the menus).
    """
    if not ed_facilities:
        raise ValueError("cannot build catalog without at least one ED facility")
    have_ad = bool(ad_facilities)
    menus: dict[tuple[int, int, int, int], ActionMenu] = {}
    for i, station in enumerate(stations):
        for j, node in enumerate(nodes):
            r_ij = float(travel.minutes[i, j])
            for k, utype in enumerate(unit_types):
                for a, actual_name in enumerate(condition_model.actual):
                    satisfying, diverting = _menu_actions(
                        utype.capability, actual_name, have_ad
                    )
                    feasible = tuple(satisfying) + (Action.SUPPORT,)
                    specs = tuple(
                        ActionSpec(
                            action=act,
                            legs=action_time_legs(
                                act,
                                r_ij,
                                node.position,
                                station.position,
                                ed_facilities,
                                ad_facilities,
                                constants,
                                travel_model,
                                include_return_leg,
                            ),
                        )
                        for act in feasible
                    )
                    menus[(i, j, k, a)] = ActionMenu(
                        specs=specs,
                        satisfying=frozenset(satisfying),
                        diverting=frozenset(diverting),
                    )
    return ActionCatalog(menus=menus)
