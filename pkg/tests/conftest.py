"""Shared fixtures and instance factories for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from emsdivert import (
    BuildOptions,
    Capability,
    ConditionModel,
    DemandNode,
    ScenarioInstance,
    ServiceTimeConstants,
    Station,
    TravelModel,
    UnitType,
    build_catalog,
    generate_region,
    travel_matrix,
    urban_condition_model,
    validate,
)

BELIEVED = ("likely_eligible", "likely_not_eligible")
ACTUAL = ("ed", "ad", "tip")


def make_instance(
    station_positions,
    node_positions,
    rates,
    fleet=(1, 1),
    p=None,
    alpha=0.3,
    coverage_threshold=None,
    ed_facilities=((0.0, 0.0),),
    ad_facilities=((1.0, 1.0),),
    include_return_leg=True,
    constants=None,
    name="toy",
) -> ScenarioInstance:
    """Hand-assembled instance; rates is (n_nodes, n_believed)."""
    travel_model = TravelModel()
    constants = constants or ServiceTimeConstants()
    stations = tuple(
        Station(id=f"S{i + 1}", position=tuple(pos))
        for i, pos in enumerate(station_positions)
    )
    rates = np.asarray(rates, dtype=float)
    nodes = tuple(
        DemandNode(
            id=f"N{j + 1}",
            position=tuple(pos),
            rates_per_hour=tuple(float(v) for v in rates[j]),
        )
        for j, pos in enumerate(node_positions)
    )
    unit_types = (
        UnitType("trad", Capability.TRADITIONAL, int(fleet[0])),
        UnitType("cap", Capability.DIVERSION_CAPABLE, int(fleet[1])),
    )
    if p is None:
        model = urban_condition_model()
    else:
        p = np.asarray(p, dtype=float)
        model = ConditionModel(BELIEVED[: p.shape[0]], ACTUAL[: p.shape[1]], p)
    travel = travel_matrix(
        travel_model,
        [s.position for s in stations],
        [n.position for n in nodes],
    )
    catalog = build_catalog(
        stations,
        nodes,
        unit_types,
        model,
        travel,
        tuple(tuple(f) for f in ed_facilities),
        tuple(tuple(f) for f in ad_facilities),
        constants,
        travel_model,
        include_return_leg=include_return_leg,
    )
    if coverage_threshold is None:
        coverage_threshold = float(travel.minutes.min(axis=0).max()) + 1.0
    instance = ScenarioInstance(
        name=name,
        stations=stations,
        demand_nodes=nodes,
        unit_types=unit_types,
        condition_model=model,
        travel=travel,
        catalog=catalog,
        ed_facilities=tuple(tuple(f) for f in ed_facilities),
        ad_facilities=tuple(tuple(f) for f in ad_facilities),
        travel_model=travel_model,
        service_constants=constants,
        alpha=alpha,
        coverage_threshold=coverage_threshold,
        include_return_leg=include_return_leg,
        meta={},
    )
    problems = validate(instance)
    assert not problems, problems
    return instance


def random_toy(
    rng: np.random.Generator,
    max_stations=2,
    max_nodes=3,
    max_per_type=2,
    rate_range=(0.2, 2.0),
    alpha=0.3,
    strictly_positive_p=True,
) -> ScenarioInstance:
    """Random small instance inside the oracle-tractable size bounds."""
    n_stations = int(rng.integers(1, max_stations + 1))
    n_nodes = int(rng.integers(1, max_nodes + 1))
    fleet = (
        int(rng.integers(0, max_per_type + 1)),
        int(rng.integers(0, max_per_type + 1)),
    )
    if fleet == (0, 0):
        fleet = (1, 1)
    station_positions = rng.uniform(0.0, 6.0, (n_stations, 2))
    node_positions = rng.uniform(0.0, 6.0, (n_nodes, 2))
    rates = rng.uniform(rate_range[0], rate_range[1], (n_nodes, 2))
    if strictly_positive_p:
        p = rng.uniform(0.05, 1.0, (2, 3))
        p = p / p.sum(axis=1, keepdims=True)
    else:
        p = None
    ed = (tuple(rng.uniform(0.0, 6.0, 2)),)
    ad = (tuple(rng.uniform(0.0, 6.0, 2)),)
    return make_instance(
        station_positions,
        node_positions,
        rates,
        fleet=fleet,
        p=p,
        alpha=alpha,
        ed_facilities=ed,
        ad_facilities=ad,
        name="toy-random",
    )


def tiny_instance(**overrides) -> ScenarioInstance:
    """One station, one node, colocated, one unit of each type."""
    kwargs = dict(
        station_positions=[(0.0, 0.0)],
        node_positions=[(1.0, 0.0)],
        rates=[(0.3, 0.5)],
        fleet=(1, 1),
        ed_facilities=((0.0, 1.0),),
        ad_facilities=((1.0, 1.0),),
    )
    kwargs.update(overrides)
    return make_instance(**kwargs)


@pytest.fixture(scope="session")
def reference_instance():
    return generate_region("reference", 0)


@pytest.fixture(scope="session")
def urban_small_instance():
    return generate_region("urban-small", 0)


@pytest.fixture()
def default_options():
    return BuildOptions()
