"""Synthetic region generation and scenario transforms.

Regions are square-grid cell layouts whose demand density follows one of
four parametric profiles (a single urban core, a core with periphery,
several distinct clusters, or near-uniform sparse demand).  Node rates
are normalized so the total annual call volume matches the archetype,
then split across believed condition classes by the screened proportions.
Stations and treatment facilities sit in high-density cells subject to a
minimum spacing.  Everything is deterministic given the seed.

Also here: the fleet-composition sweep (reassigning units between the
traditional and diversion-capable types at constant total) and the
screening-accuracy transforms (perfect / improved / realistic / none).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .actions import ServiceTimeConstants, build_catalog
from .domain import (
    BELIEVED_DEFAULT,
    Capability,
    ConditionModel,
    DemandNode,
    Point,
    RURAL_BELIEVED_SHARES,
    ScenarioInstance,
    Station,
    URBAN_BELIEVED_SHARES,
    UnitType,
    rural_condition_model,
    urban_condition_model,
    validate,
)
from .geometry import TravelModel, travel_matrix

HOURS_PER_YEAR = 8760.0

PROFILES = ("single_core", "core_plus_periphery", "multi_cluster", "sparse")


@dataclass(frozen=True)
class RegionArchetype:
    """Generation parameters for one synthetic region family."""

    name: str
    density_profile: str
    cell_area_sq_miles: float
    node_count: int
    station_count: int
    fleet_size: int
    annual_calls: float
    capable_fraction: float = 0.25
    condition_tables: str = "urban"  # "urban" or "rural"
    alpha: float = 0.05
    coverage_threshold: float | None = None  # None -> derived from geometry
    ed_count: int | None = None
    ad_count: int | None = None

    def __post_init__(self) -> None:
        if self.density_profile not in PROFILES:
            raise ValueError(f"unknown density profile {self.density_profile!r}")
        if min(self.node_count, self.station_count, self.fleet_size) <= 0:
            raise ValueError("counts must be positive")
        if self.annual_calls <= 0 or self.cell_area_sq_miles <= 0:
            raise ValueError("annual calls and cell area must be positive")
        if not 0.0 <= self.capable_fraction <= 1.0:
            raise ValueError("capable fraction must lie in [0, 1]")


#: Region families: the four full-scale archetypes plus reduced-scale
#: regions sized so the extensive form stays solvable on one machine.
ARCHETYPES: dict[str, RegionArchetype] = {
    "urban": RegionArchetype(
        "urban", "single_core", 1.5, 217, 10, 25, 97185.0
    ),
    "mixed": RegionArchetype(
        "mixed", "core_plus_periphery", 1.5, 239, 8, 24, 55826.0
    ),
    "suburban": RegionArchetype(
        "suburban", "multi_cluster", 2.0, 501, 17, 38, 69139.0
    ),
    "rural": RegionArchetype(
        "rural", "sparse", 5.0, 83, 4, 8, 9523.0, condition_tables="rural"
    ),
    "urban-small": RegionArchetype(
        "urban-small", "single_core", 1.5, 16, 4, 10, 15000.0
    ),
    "reference": RegionArchetype(
        "reference", "single_core", 2.0, 12, 3, 8, 12000.0
    ),
}


def _grid_positions(count: int, side: float) -> list[Point]:
    """Cell centers of the smallest near-square grid, trimmed to count.

    The grid may exceed the target; the cells farthest from the region
    center are dropped (ties by cell index), keeping the shape compact.
    """
    nx = math.ceil(math.sqrt(count))
    ny = math.ceil(count / nx)
    cells: list[Point] = []
    for iy in range(ny):
        for ix in range(nx):
            cells.append(((ix + 0.5) * side, (iy + 0.5) * side))
    cx = nx * side / 2.0
    cy = ny * side / 2.0
    order = sorted(
        range(len(cells)),
        key=lambda idx: (
            (cells[idx][0] - cx) ** 2 + (cells[idx][1] - cy) ** 2,
            idx,
        ),
    )
    keep = sorted(order[:count])
    return [cells[idx] for idx in keep]


def _density_weights(
    profile: str, positions: list[Point], rng: np.random.Generator
) -> np.ndarray:
    xs = np.array([p[0] for p in positions])
    ys = np.array([p[1] for p in positions])
    extent = max(xs.max() - xs.min(), ys.max() - ys.min()) + 1e-9
    cx = (xs.max() + xs.min()) / 2.0
    cy = (ys.max() + ys.min()) / 2.0

    def gauss(cx_, cy_, sigma):
        return np.exp(-((xs - cx_) ** 2 + (ys - cy_) ** 2) / (2.0 * sigma**2))

    def random_centers(n, margin=0.15):
        lo_x = xs.min() + margin * extent
        hi_x = xs.max() - margin * extent
        lo_y = ys.min() + margin * extent
        hi_y = ys.max() - margin * extent
        return [
            (rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y))
            for _ in range(n)
        ]

    n = len(positions)
    if profile == "single_core":
        w = 0.05 / n + 0.95 * gauss(cx, cy, 0.18 * extent)
    elif profile == "core_plus_periphery":
        w = 0.40 / n + 0.60 * gauss(cx, cy, 0.13 * extent)
    elif profile == "multi_cluster":
        w = np.full(n, 0.10 / n)
        for ccx, ccy in random_centers(4):
            w = w + 0.225 * gauss(ccx, ccy, 0.10 * extent)
    else:  # sparse
        w = np.full(n, 0.75 / n)
        for ccx, ccy in random_centers(2):
            w = w + 0.125 * gauss(ccx, ccy, 0.20 * extent)
    return w / w.sum()


def _spaced_picks(
    positions: list[Point],
    weights: np.ndarray,
    count: int,
    min_spacing: float,
) -> list[Point]:
    """Greedy highest-weight cells honoring a spacing that relaxes as
    needed so the pick is always total."""
    order = sorted(range(len(positions)), key=lambda i: (-weights[i], i))
    spacing = min_spacing
    while True:
        picked: list[Point] = []
        for idx in order:
            pos = positions[idx]
            if all(
                math.hypot(pos[0] - q[0], pos[1] - q[1]) >= spacing
                for q in picked
            ):
                picked.append(pos)
                if len(picked) == count:
                    return picked
        spacing *= 0.7
        if spacing < 1e-6:
            raise ValueError(
                f"cannot place {count} sites among {len(positions)} cells"
            )


def generate_region(
    archetype: RegionArchetype | str,
    seed: int,
    constants: ServiceTimeConstants | None = None,
    travel_model: TravelModel | None = None,
) -> ScenarioInstance:
    """Build a complete, validated instance for one archetype and seed."""
    if isinstance(archetype, str):
        try:
            archetype = ARCHETYPES[archetype]
        except KeyError:
            raise ValueError(
                f"unknown archetype {archetype!r}; choices: "
                + ", ".join(sorted(ARCHETYPES))
            ) from None
    constants = constants or ServiceTimeConstants()
    travel_model = travel_model or TravelModel()
    rng = np.random.default_rng(seed)

    side = math.sqrt(archetype.cell_area_sq_miles)
    positions = _grid_positions(archetype.node_count, side)
    weights = _density_weights(archetype.density_profile, positions, rng)
    extent = max(
        max(p[0] for p in positions) - min(p[0] for p in positions),
        max(p[1] for p in positions) - min(p[1] for p in positions),
    )

    total_rate = archetype.annual_calls / HOURS_PER_YEAR
    if archetype.condition_tables == "rural":
        condition_model = rural_condition_model()
        shares = RURAL_BELIEVED_SHARES
    else:
        condition_model = urban_condition_model()
        shares = URBAN_BELIEVED_SHARES

    digits = len(str(archetype.node_count))
    nodes = tuple(
        DemandNode(
            id=f"N{j + 1:0{digits}d}",
            position=positions[j],
            rates_per_hour=tuple(
                total_rate * weights[j] * share for share in shares
            ),
        )
        for j in range(archetype.node_count)
    )

    station_spacing = 0.45 * extent / math.sqrt(archetype.station_count)
    station_pos = _spaced_picks(
        positions, weights, archetype.station_count, station_spacing
    )
    stations = tuple(
        Station(id=f"S{i + 1}", position=pos)
        for i, pos in enumerate(station_pos)
    )

    n_ed = archetype.ed_count or max(1, round(archetype.station_count / 3))
    n_ad = archetype.ad_count or max(1, round(archetype.station_count / 2))
    ed_facilities = tuple(
        _spaced_picks(positions, weights, n_ed, 0.8 * extent / math.sqrt(n_ed))
    )
    ad_facilities = tuple(
        _spaced_picks(positions, weights, n_ad, 0.6 * extent / math.sqrt(n_ad))
    )

    n_capable = round(archetype.capable_fraction * archetype.fleet_size)
    unit_types = (
        UnitType("trad", Capability.TRADITIONAL, archetype.fleet_size - n_capable),
        UnitType("cap", Capability.DIVERSION_CAPABLE, n_capable),
    )

    travel = travel_matrix(travel_model, [s.position for s in stations], positions)

    if archetype.coverage_threshold is not None:
        threshold = archetype.coverage_threshold
    else:
        worst_best = float(travel.minutes.min(axis=0).max())
        threshold = math.ceil(worst_best) + 2.0

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
        include_return_leg=True,
    )

    instance = ScenarioInstance(
        name=f"{archetype.name}-{seed}",
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
        alpha=archetype.alpha,
        coverage_threshold=threshold,
        include_return_leg=True,
        meta={
            "archetype": archetype.name,
            "seed": seed,
            "density_profile": archetype.density_profile,
            "annual_calls": archetype.annual_calls,
        },
    )
    problems = validate(instance)
    if problems:  # pragma: no cover - generation is total by construction
        raise AssertionError("generated instance invalid: " + problems[0])
    return instance


def derive_service_times(
    instance: ScenarioInstance,
    constants: ServiceTimeConstants | None = None,
    travel_model: TravelModel | None = None,
):
    """Re-derive the action catalog (with q values) for an instance."""
    return build_catalog(
        instance.stations,
        instance.demand_nodes,
        instance.unit_types,
        instance.condition_model,
        instance.travel,
        instance.ed_facilities,
        instance.ad_facilities,
        constants or instance.service_constants,
        travel_model or instance.travel_model,
        include_return_leg=instance.include_return_leg,
    )


def fleet_composition_sweep(
    instance: ScenarioInstance, diversion_capable_counts: list[int]
) -> list[ScenarioInstance]:
    """Variants reassigning units between the two types, total constant."""
    trad = next(
        u for u in instance.unit_types if u.capability is Capability.TRADITIONAL
    )
    cap = next(
        u
        for u in instance.unit_types
        if u.capability is Capability.DIVERSION_CAPABLE
    )
    total = trad.fleet_size + cap.fleet_size
    out = []
    for count in diversion_capable_counts:
        if count < 0 or count > total:
            raise ValueError(
                f"capable count {count} outside [0, {total}] for this fleet"
            )
        new_types = tuple(
            dc_replace(
                u,
                fleet_size=(
                    count
                    if u.capability is Capability.DIVERSION_CAPABLE
                    else total - count
                ),
            )
            for u in instance.unit_types
        )
        out.append(
            instance.replace(
                name=f"{instance.name}-cap{count}",
                unit_types=new_types,
                meta={**instance.meta, "capable_count": count},
            )
        )
    return out


# ---- screening-accuracy transforms --------------------------------------

#: Actual classes counted as "eligible" when judging screening accuracy.
_DIVERTIBLE_ACTUAL = ("ad", "tip")

SCREENING_SCENARIOS = ("perfect", "improved", "realistic", "no_screening")


def _aligned_mask(believed_name: str, actual: tuple[str, ...]) -> np.ndarray:
    """True for actual classes the believed class is 'meant' to catch."""
    if "not" in believed_name:
        return np.array([a not in _DIVERTIBLE_ACTUAL for a in actual])
    return np.array([a in _DIVERTIBLE_ACTUAL for a in actual])


def improve_model(model: ConditionModel) -> ConditionModel:
    """Halve each row's misclassification mass and renormalize."""
    p = model.p.copy()
    for t, name in enumerate(model.believed):
        aligned = _aligned_mask(name, model.actual)
        wrong = float(p[t, ~aligned].sum())
        right = float(p[t, aligned].sum())
        if wrong <= 0.0 or right <= 0.0:
            continue
        p[t, ~aligned] *= 0.5
        p[t, aligned] *= (1.0 - 0.5 * wrong) / right
    return ConditionModel(model.believed, model.actual, p)


def screening_scenarios(
    model: ConditionModel, believed_weights: tuple[float, ...]
) -> dict[str, ConditionModel]:
    """The four screening-accuracy condition models.

    believed_weights are the population shares of the believed classes
    (used for the no-screening mixture row).

    realistic: the given model unchanged.  improved: misclassification
    mass halved per row.  no_screening: a single believed class whose row
    is the weight-mixed actual distribution.  perfect: believed classes
    equal actual classes with an identity matrix.
    """
    w = np.asarray(believed_weights, dtype=float)
    if w.shape != (len(model.believed),) or w.sum() <= 0:
        raise ValueError("believed_weights must match the believed classes")
    w = w / w.sum()
    mixture = w @ model.p

    return {
        "realistic": model,
        "improved": improve_model(model),
        "no_screening": ConditionModel(
            ("all",), model.actual, mixture.reshape(1, -1)
        ),
        "perfect": ConditionModel(
            model.actual, model.actual, np.eye(len(model.actual))
        ),
    }


def apply_screening(
    instance: ScenarioInstance, scenario: str
) -> ScenarioInstance:
    """Instance variant under a screening-accuracy scenario.

    Node rates are re-split to match the scenario's believed classes:
    no_screening pools each node's total rate into the single class;
    perfect splits it by the node's own actual-condition mixture (what a
    flawless screener would report).
    """
    if scenario not in SCREENING_SCENARIOS:
        raise ValueError(
            f"unknown screening scenario {scenario!r}; choices: "
            + ", ".join(SCREENING_SCENARIOS)
        )
    if scenario == "realistic":
        return instance.replace(
            meta={**instance.meta, "screening": scenario}
        )

    base = instance.condition_model
    totals = np.array(
        [sum(node.rates_per_hour) for node in instance.demand_nodes]
    )
    global_weights = np.array(
        [
            sum(node.rates_per_hour[t] for node in instance.demand_nodes)
            for t in range(len(base.believed))
        ]
    )
    scenarios = screening_scenarios(
        base, tuple(global_weights / max(global_weights.sum(), 1e-300))
    )
    new_model = scenarios[scenario]

    if scenario == "improved":
        new_nodes = instance.demand_nodes  # same believed classes
    elif scenario == "no_screening":
        new_nodes = tuple(
            dc_replace(node, rates_per_hour=(float(total),))
            for node, total in zip(instance.demand_nodes, totals)
        )
    else:  # perfect: split by the node's own actual mixture
        new_nodes = []
        for node in instance.demand_nodes:
            rates = np.asarray(node.rates_per_hour)
            mixture = rates @ base.p
            new_nodes.append(
                dc_replace(node, rates_per_hour=tuple(float(v) for v in mixture))
            )
        new_nodes = tuple(new_nodes)

    rebuilt = instance.replace(
        condition_model=new_model,
        demand_nodes=new_nodes,
        meta={**instance.meta, "screening": scenario},
    )
    # believed classes changed, so the menus' believed axis is untouched
    # (menus key on actual only); validation keeps us honest
    problems = validate(rebuilt)
    if problems:  # pragma: no cover - transform preserves validity
        raise AssertionError("screening transform broke the instance: " + problems[0])
    return rebuilt
