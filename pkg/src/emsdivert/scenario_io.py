"""Scenario file round trip.

Scenario files are YAML documents carrying the primitive data only:
geometry, rates, condition matrix, fleet, facility positions, and the
travel / service-time parameters.  The travel matrix and the action
catalog are derived quantities and are rebuilt on load, which keeps
files small and guarantees they can never disagree with the geometry.
"""
from __future__ import annotations

from typing import Mapping

import yaml

from .actions import ServiceTimeConstants, build_catalog
from .domain import (
    Capability,
    ConditionModel,
    DemandNode,
    ScenarioInstance,
    Station,
    UnitType,
    validate,
)
from .geometry import TravelModel, travel_matrix

FORMAT_NAME = "ems-scenario"
FORMAT_VERSION = 1


class ScenarioFormatError(ValueError):
    pass


def _point(value) -> tuple[float, float]:
    x, y = value
    return (float(x), float(y))


def instance_to_dict(instance: ScenarioInstance) -> dict:
    cm = instance.condition_model
    tm = instance.travel_model
    sc = instance.service_constants
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": instance.name,
        "alpha": float(instance.alpha),
        "coverage_threshold": float(instance.coverage_threshold),
        "include_return_leg": bool(instance.include_return_leg),
        "travel_model": {
            "acceleration": float(tm.acceleration),
            "cruise_speed": float(tm.cruise_speed),
            "metric": tm.metric,
        },
        "service_minutes": {
            "ed": float(sc.ed_minutes),
            "ad": float(sc.ad_minutes),
            "tip": float(sc.tip_minutes),
            "support": float(sc.support_minutes),
        },
        "condition_model": {
            "believed": list(cm.believed),
            "actual": list(cm.actual),
            "p": [[float(v) for v in row] for row in cm.p],
            "notes": list(cm.renormalization_notes),
        },
        "stations": [
            {"id": s.id, "position": [float(s.position[0]), float(s.position[1])]}
            for s in instance.stations
        ],
        "demand_nodes": [
            {
                "id": n.id,
                "position": [float(n.position[0]), float(n.position[1])],
                "rates_per_hour": [float(r) for r in n.rates_per_hour],
            }
            for n in instance.demand_nodes
        ],
        "unit_types": [
            {
                "id": u.id,
                "capability": u.capability.value,
                "fleet_size": int(u.fleet_size),
            }
            for u in instance.unit_types
        ],
        "ed_facilities": [[float(x), float(y)] for x, y in instance.ed_facilities],
        "ad_facilities": [[float(x), float(y)] for x, y in instance.ad_facilities],
        "meta": {str(k): v for k, v in sorted(instance.meta.items())},
    }


def save_scenario(path: str, instance: ScenarioInstance) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(
            instance_to_dict(instance),
            fh,
            sort_keys=True,
            default_flow_style=None,
        )


def instance_from_dict(data: Mapping) -> ScenarioInstance:
    if data.get("format") != FORMAT_NAME:
        raise ScenarioFormatError(
            f"not a scenario file (format={data.get('format')!r})"
        )
    if int(data.get("version", 0)) != FORMAT_VERSION:
        raise ScenarioFormatError(
            f"unsupported scenario version {data.get('version')!r}"
        )
    try:
        tm_data = data["travel_model"]
        travel_model = TravelModel(
            acceleration=float(tm_data["acceleration"]),
            cruise_speed=float(tm_data["cruise_speed"]),
            metric=str(tm_data.get("metric", "euclidean")),
        )
        sm = data["service_minutes"]
        constants = ServiceTimeConstants(
            ed_minutes=float(sm["ed"]),
            ad_minutes=float(sm["ad"]),
            tip_minutes=float(sm["tip"]),
            support_minutes=float(sm["support"]),
        )
        cm_data = data["condition_model"]
        condition_model = ConditionModel(
            believed=tuple(cm_data["believed"]),
            actual=tuple(cm_data["actual"]),
            p=[[float(v) for v in row] for row in cm_data["p"]],
            renormalization_notes=tuple(cm_data.get("notes", [])),
        )
        stations = tuple(
            Station(id=str(s["id"]), position=_point(s["position"]))
            for s in data["stations"]
        )
        nodes = tuple(
            DemandNode(
                id=str(n["id"]),
                position=_point(n["position"]),
                rates_per_hour=tuple(float(r) for r in n["rates_per_hour"]),
            )
            for n in data["demand_nodes"]
        )
        unit_types = tuple(
            UnitType(
                id=str(u["id"]),
                capability=Capability(u["capability"]),
                fleet_size=int(u["fleet_size"]),
            )
            for u in data["unit_types"]
        )
        ed_facilities = tuple(_point(v) for v in data["ed_facilities"])
        ad_facilities = tuple(_point(v) for v in data.get("ad_facilities", []))
        include_return = bool(data.get("include_return_leg", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"malformed scenario file: {exc}") from exc

    travel = travel_matrix(
        travel_model, [s.position for s in stations], [n.position for n in nodes]
    )
    catalog = build_catalog(
        stations,
        nodes,
        unit_types,
        condition_model,
        travel,
        ed_facilities,
        ad_facilities,
        constants,
        travel_model,
        include_return_leg=include_return,
    )
    instance = ScenarioInstance(
        name=str(data.get("name", "scenario")),
        stations=stations,
        demand_nodes=nodes,
        unit_types=unit_types,
        condition_model=condition_model,
        travel=travel,
        catalog=catalog,
        ed_facilities=ed_facilities,
        ad_facilities=ad_facilities,
        travel_model=travel_model,
        service_constants=constants,
        alpha=float(data.get("alpha", 0.05)),
        coverage_threshold=float(data.get("coverage_threshold", 15.0)),
        include_return_leg=include_return,
        meta=dict(data.get("meta", {})),
    )
    problems = validate(instance)
    if problems:
        raise ScenarioFormatError(
            "invalid scenario: " + "; ".join(problems[:5])
        )
    return instance


def load_scenario(path: str) -> ScenarioInstance:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, Mapping):
        raise ScenarioFormatError("scenario file must hold a mapping")
    return instance_from_dict(data)
