"""Solver-agnostic MILP construction for the two-stage planning problem.

Stage one decides unit allocation (z) and the initial dispatch policy per
believed condition (y); stage two, indexed by the actual condition revealed
on scene, decides the action each dispatched unit takes (x) plus an
optional secondary dispatch (yhat) with its own action (xhat).  The
objective maximizes the expected rate of calls resolved away from the ED.

Availability is enforced through an offered-load budget per station and
unit type: total expected busy time generated by the policy must fit
within the Erlang-loss capacity of the units allocated there, linearized
by the marginal capacity of each additional unit.

Branches with zero conditional probability are omitted entirely: they
carry no objective weight and no load, and forcing their satisfaction
would add constraints the formulation never exercises.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .domain import Action, ScenarioInstance, validate
from .queueing import CapacitySchedule, capacity_schedule

BINARY = "binary"
CONTINUOUS = "continuous"


def _ordered(actions: Iterable[Action]) -> list[Action]:
    """Stable action order for iteration over menu sets."""
    return sorted(actions, key=lambda m: m.value)

#: Map from constraint/domain family name to its tag in the model audit.
EQUATION_TAGS = {
    "fleet_budget": "A.2",
    "station_ordering": "A.3",
    "dispatch_requires_unit": "A.4",
    "satisfy_exactly_once": "A.5",
    "recourse_requires_unit": "A.6",
    "primary_action_link": "A.7",
    "recourse_action_link": "A.8",
    "availability_capacity": "A.9",
    "service_time_floor": "A.10",
    "recourse_service_time": "A.11",
    "availability_membership": "A.12",
    "coverage": "A.13",
    "action_binary": "A.14",
    "dispatch_binary": "A.15",
    "allocation_binary": "A.16",
    "service_time_nonneg": "A.17",
    "single_response_limit": "R.single_response",
    "no_secondary": "R.no_secondary",
}


class Strategy(enum.Enum):
    """Dispatch strategy restriction applied to the model.

    FULL_DISPATCH leaves the formulation unrestricted; MULTIPLE_RESPONSE
    forbids secondary (recourse) dispatches; SINGLE_RESPONSE additionally
    limits each call to one initial unit.
    """

    FULL_DISPATCH = "full"
    MULTIPLE_RESPONSE = "multiple"
    SINGLE_RESPONSE = "single"


@dataclass(frozen=True)
class BuildOptions:
    strategy: Strategy = Strategy.FULL_DISPATCH
    availability: bool = True
    coverage: bool = False
    coverage_threshold: float | None = None  # None -> instance value


class BuildError(ValueError):
    """Raised when an instance cannot yield a well-posed model."""

    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass
class Variable:
    name: str
    kind: str  # BINARY or CONTINUOUS
    lower: float
    upper: float


@dataclass
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str  # "<=", ">=", "="
    rhs: float
    family: str


class VariableIndex:
    """Bijection between structured variable keys and dense ids.

    Keys are colon-joined strings such as ``y:S1:N3:cap:likely_eligible``;
    component ids never contain a colon (enforced by instance validation).
    """

    def __init__(self) -> None:
        self._keys: list[str] = []
        self._ids: dict[str, int] = {}

    def add(self, *parts: object) -> int:
        key = ":".join(str(p) for p in parts)
        if key in self._ids:
            raise ValueError(f"duplicate variable key {key!r}")
        vid = len(self._keys)
        self._keys.append(key)
        self._ids[key] = vid
        return vid

    def id_of(self, key: str) -> int:
        return self._ids[key]

    def get(self, key: str) -> int | None:
        return self._ids.get(key)

    def key_of(self, vid: int) -> str:
        return self._keys[vid]

    def parts(self, vid: int) -> tuple[str, ...]:
        return tuple(self._keys[vid].split(":"))

    def lp_name(self, vid: int) -> str:
        return self._keys[vid].replace(":", "_")

    def by_prefix(self, prefix: str) -> Iterator[tuple[str, int]]:
        pre = prefix + ":"
        for key, vid in self._ids.items():
            if key.startswith(pre):
                yield key, vid

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._ids


@dataclass
class MipModel:
    """A mixed-binary linear program, sense fixed to maximize."""

    variables: list[Variable]
    constraints: list[Constraint]
    objective: tuple[tuple[int, float], ...]
    extra_families: tuple[str, ...] = ()
    warm_start: dict[int, float] | None = None

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def binary_ids(self) -> list[int]:
        return [
            i for i, v in enumerate(self.variables) if v.kind == BINARY
        ]

    def objective_value(self, assignment: np.ndarray) -> float:
        return float(sum(c * assignment[i] for i, c in self.objective))

    def check_assignment(
        self, assignment: np.ndarray, tol: float = 1e-6
    ) -> list[str]:
        """All constraint/bound/integrality violations beyond tol."""
        out: list[str] = []
        x = np.asarray(assignment, dtype=float)
        if x.shape != (len(self.variables),):
            return [
                f"assignment length {x.shape} does not match "
                f"{len(self.variables)} variables"
            ]
        for i, v in enumerate(self.variables):
            if x[i] < v.lower - tol or x[i] > v.upper + tol:
                out.append(
                    f"variable {v.name} = {x[i]!r} outside "
                    f"[{v.lower}, {v.upper}]"
                )
            if v.kind == BINARY and abs(x[i] - round(x[i])) > tol:
                out.append(f"variable {v.name} = {x[i]!r} not integral")
        for c in self.constraints:
            lhs = sum(coef * x[vid] for vid, coef in c.terms)
            if c.sense == "<=" and lhs > c.rhs + tol:
                out.append(f"constraint {c.name}: {lhs!r} > {c.rhs!r}")
            elif c.sense == ">=" and lhs < c.rhs - tol:
                out.append(f"constraint {c.name}: {lhs!r} < {c.rhs!r}")
            elif c.sense == "=" and abs(lhs - c.rhs) > tol:
                out.append(f"constraint {c.name}: {lhs!r} != {c.rhs!r}")
        return out

    def present_families(self) -> dict[str, str]:
        """Family name -> audit tag for every family present in the model.

        Constraint families come from rows; variable-domain families from
        the kinds and bounds of the variables; extra_families records
        block-level facts (such as availability membership) that have no
        standalone row after linearization.
        """
        fams = {c.family for c in self.constraints}
        fams.update(self.extra_families)
        for v in self.variables:
            head = v.name.split(":", 1)[0]
            if head in ("x", "xh") and v.kind == BINARY:
                fams.add("action_binary")
            elif head in ("y", "yh") and v.kind == BINARY:
                fams.add("dispatch_binary")
            elif head == "z" and v.kind == BINARY:
                fams.add("allocation_binary")
            elif head in ("tau", "tauh") and v.lower >= 0:
                fams.add("service_time_nonneg")
        return {f: EQUATION_TAGS[f] for f in sorted(fams)}


class _Builder:
    """Accumulates variables and constraints with shared bookkeeping."""

    def __init__(self) -> None:
        self.index = VariableIndex()
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}

    def var(
        self, kind: str, lower: float, upper: float, *parts: object
    ) -> int:
        vid = self.index.add(*parts)
        self.variables.append(
            Variable(self.index.key_of(vid), kind, lower, upper)
        )
        return vid

    def row(
        self,
        name: str,
        terms: Iterable[tuple[int, float]],
        sense: str,
        rhs: float,
        family: str,
    ) -> None:
        self.constraints.append(
            Constraint(name, tuple(terms), sense, rhs, family)
        )

    def add_objective(self, vid: int, coef: float) -> None:
        self.objective[vid] = self.objective.get(vid, 0.0) + coef

    def finish(self, extra_families: tuple[str, ...] = ()) -> tuple[MipModel, VariableIndex]:
        obj = tuple(sorted(self.objective.items()))
        return (
            MipModel(self.variables, self.constraints, obj, extra_families),
            self.index,
        )


def build_extensive_form(
    instance: ScenarioInstance, options: BuildOptions | None = None
) -> tuple[MipModel, VariableIndex]:
    """Build the extensive-form model for one instance and option set.

    Raises BuildError on instance validation failures, and on structural
    infeasibility detectable before solving: zero total fleet, or (with
    coverage on) a demand node no station can reach within the threshold.
    """
    options = options or BuildOptions()
    diagnostics = validate(instance)
    if diagnostics:
        raise BuildError(diagnostics)

    n_i = instance.n_stations
    n_j = instance.n_nodes
    n_k = instance.n_types
    believed = instance.believed
    actual = instance.actual
    p = instance.condition_model.p
    travel = instance.travel.minutes
    types = instance.unit_types

    threshold = (
        instance.coverage_threshold
        if options.coverage_threshold is None
        else options.coverage_threshold
    )
    if options.coverage:
        uncovered = [
            instance.demand_nodes[j].id
            for j in range(n_j)
            if not any(travel[i, j] <= threshold + 1e-9 for i in range(n_i))
        ]
        if uncovered:
            raise BuildError(
                [
                    f"node {nid!r} has no station within coverage threshold "
                    f"{threshold:g} min"
                    for nid in uncovered
                ]
            )

    allow_secondary = options.strategy is Strategy.FULL_DISPATCH

    b = _Builder()
    station_ids = [s.id for s in instance.stations]
    node_ids = [n.id for n in instance.demand_nodes]
    type_ids = [u.id for u in types]

    # branches (t, a) with positive conditional probability
    branches = [
        (t, a)
        for t in range(len(believed))
        for a in range(len(actual))
        if p[t, a] > 0.0
    ]

    # ---- variables ----------------------------------------------------
    z: dict[tuple[int, int, int], int] = {}
    for i in range(n_i):
        for k in range(n_k):
            for n in range(1, types[k].fleet_size + 1):
                z[(i, k, n)] = b.var(
                    BINARY, 0.0, 1.0, "z", station_ids[i], type_ids[k], n
                )

    y: dict[tuple[int, int, int, int], int] = {}
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                for t in range(len(believed)):
                    y[(i, j, k, t)] = b.var(
                        BINARY,
                        0.0,
                        1.0,
                        "y",
                        station_ids[i],
                        node_ids[j],
                        type_ids[k],
                        believed[t],
                    )

    x: dict[tuple[int, int, int, int, int, Action], int] = {}
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                for t, a in branches:
                    menu = instance.catalog.menu(i, j, k, a)
                    for spec in menu.specs:
                        x[(i, j, k, t, a, spec.action)] = b.var(
                            BINARY,
                            0.0,
                            1.0,
                            "x",
                            station_ids[i],
                            node_ids[j],
                            type_ids[k],
                            believed[t],
                            actual[a],
                            spec.action.value,
                        )

    yh: dict[tuple[int, int, int, int, int], int] = {}
    xh: dict[tuple[int, int, int, int, int, Action], int] = {}
    # secondary variables exist under every strategy; restricted
    # strategies pin them to zero through their bounds
    yh_upper = 1.0 if allow_secondary else 0.0
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                for t, a in branches:
                    yh[(i, j, k, t, a)] = b.var(
                        BINARY,
                        0.0,
                        yh_upper,
                        "yh",
                        station_ids[i],
                        node_ids[j],
                        type_ids[k],
                        believed[t],
                        actual[a],
                    )
                    menu = instance.catalog.menu(i, j, k, a)
                    for act in _ordered(menu.satisfying):
                        xh[(i, j, k, t, a, act)] = b.var(
                            BINARY,
                            0.0,
                            yh_upper,
                            "xh",
                            station_ids[i],
                            node_ids[j],
                            type_ids[k],
                            believed[t],
                            actual[a],
                            act.value,
                        )

    tau: dict[tuple[int, int, int, int, int], int] = {}
    tauh: dict[tuple[int, int, int, int, int], int] = {}
    if options.availability:
        for i in range(n_i):
            for j in range(n_j):
                for k in range(n_k):
                    for t, a in branches:
                        tau[(i, j, k, t, a)] = b.var(
                            CONTINUOUS,
                            0.0,
                            float("inf"),
                            "tau",
                            station_ids[i],
                            node_ids[j],
                            type_ids[k],
                            believed[t],
                            actual[a],
                        )
                        tauh[(i, j, k, t, a)] = b.var(
                            CONTINUOUS,
                            0.0,
                            float("inf"),
                            "tauh",
                            station_ids[i],
                            node_ids[j],
                            type_ids[k],
                            believed[t],
                            actual[a],
                        )

    # ---- objective: expected diversions per hour ----------------------
    for j in range(n_j):
        for t, a in branches:
            weight = float(instance.rate(j, t) * p[t, a])
            if weight == 0.0:
                continue
            for i in range(n_i):
                for k in range(n_k):
                    menu = instance.catalog.menu(i, j, k, a)
                    for act in _ordered(menu.diverting):
                        b.add_objective(x[(i, j, k, t, a, act)], weight)
                        xv = xh.get((i, j, k, t, a, act))
                        if xv is not None:
                            b.add_objective(xv, weight)

    # ---- fleet budget and allocation ordering -------------------------
    for k in range(n_k):
        terms = [
            (z[(i, k, n)], 1.0)
            for i in range(n_i)
            for n in range(1, types[k].fleet_size + 1)
        ]
        if terms:
            b.row(
                f"budget:{type_ids[k]}",
                terms,
                "<=",
                float(types[k].fleet_size),
                "fleet_budget",
            )
        for i in range(n_i):
            for n in range(2, types[k].fleet_size + 1):
                # n-th unit only after the (n-1)-th
                b.row(
                    f"order:{station_ids[i]}:{type_ids[k]}:{n}",
                    [(z[(i, k, n)], 1.0), (z[(i, k, n - 1)], -1.0)],
                    "<=",
                    0.0,
                    "station_ordering",
                )

    # ---- dispatch requires an allocated unit --------------------------
    for (i, j, k, t), yv in y.items():
        zv = z.get((i, k, 1))
        if zv is None:
            # zero fleet for this type: dispatch impossible
            b.row(
                f"link_y:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:{believed[t]}",
                [(yv, 1.0)],
                "<=",
                0.0,
                "dispatch_requires_unit",
            )
        else:
            b.row(
                f"link_y:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:{believed[t]}",
                [(yv, 1.0), (zv, -1.0)],
                "<=",
                0.0,
                "dispatch_requires_unit",
            )

    for (i, j, k, t, a), yv in yh.items():
        zv = z.get((i, k, 1))
        name = (
            f"link_yh:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:"
            f"{believed[t]}:{actual[a]}"
        )
        if zv is None:
            b.row(name, [(yv, 1.0)], "<=", 0.0, "recourse_requires_unit")
        else:
            b.row(
                name,
                [(yv, 1.0), (zv, -1.0)],
                "<=",
                0.0,
                "recourse_requires_unit",
            )

    # ---- each realized call resolved exactly once ---------------------
    for j in range(n_j):
        for t, a in branches:
            terms: list[tuple[int, float]] = []
            for i in range(n_i):
                for k in range(n_k):
                    menu = instance.catalog.menu(i, j, k, a)
                    for act in _ordered(menu.satisfying):
                        terms.append((x[(i, j, k, t, a, act)], 1.0))
                        xv = xh.get((i, j, k, t, a, act))
                        if xv is not None:
                            terms.append((xv, 1.0))
            b.row(
                f"once:{node_ids[j]}:{believed[t]}:{actual[a]}",
                terms,
                "=",
                1.0,
                "satisfy_exactly_once",
            )

    # ---- action choice linked to dispatch -----------------------------
    for i in range(n_i):
        for j in range(n_j):
            for k in range(n_k):
                for t, a in branches:
                    menu = instance.catalog.menu(i, j, k, a)
                    terms = [
                        (x[(i, j, k, t, a, spec.action)], 1.0)
                        for spec in menu.specs
                    ]
                    terms.append((y[(i, j, k, t)], -1.0))
                    b.row(
                        f"act:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:"
                        f"{believed[t]}:{actual[a]}",
                        terms,
                        "=",
                        0.0,
                        "primary_action_link",
                    )
                    hterms = [
                        (xh[(i, j, k, t, a, act)], 1.0)
                        for act in _ordered(menu.satisfying)
                    ]
                    hterms.append((yh[(i, j, k, t, a)], -1.0))
                    b.row(
                        f"act_h:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:"
                        f"{believed[t]}:{actual[a]}",
                        hterms,
                        "=",
                        0.0,
                        "recourse_action_link",
                    )

    # ---- availability block -------------------------------------------
    extra_families: tuple[str, ...] = ()
    if options.availability:
        extra_families = ("availability_membership",)
        max_units = max(u.fleet_size for u in types)
        schedule = capacity_schedule(instance.alpha, d_max=max(1, max_units))
        marginal = schedule.marginal

        # service time floor per (i, j, k, believed, actual)
        for i in range(n_i):
            for j in range(n_j):
                r_col_total = float(travel[:, j].sum()) * n_k
                for k in range(n_k):
                    for t, a in branches:
                        menu = instance.catalog.menu(i, j, k, a)
                        terms = [
                            (x[(i, j, k, t, a, spec.action)], spec.minutes)
                            for spec in menu.specs
                        ]
                        for i2 in range(n_i):
                            r = float(travel[i2, j])
                            if r == 0.0:
                                continue
                            for k2 in range(n_k):
                                terms.append((yh[(i2, j, k2, t, a)], r))
                        terms.append((y[(i, j, k, t)], r_col_total))
                        terms.append((tau[(i, j, k, t, a)], -1.0))
                        b.row(
                            f"tmin:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:"
                            f"{believed[t]}:{actual[a]}",
                            terms,
                            "<=",
                            r_col_total,
                            "service_time_floor",
                        )
                        # secondary service time is exact, not a floor
                        hterms = [
                            (xh[(i, j, k, t, a, act)], menu.spec(act).minutes)
                            for act in _ordered(menu.satisfying)
                        ]
                        hterms.append((tauh[(i, j, k, t, a)], -1.0))
                        b.row(
                            f"tsec:{station_ids[i]}:{node_ids[j]}:{type_ids[k]}:"
                            f"{believed[t]}:{actual[a]}",
                            hterms,
                            "=",
                            0.0,
                            "recourse_service_time",
                        )

        # offered load within allocated Erlang-loss capacity per (i, k)
        for i in range(n_i):
            for k in range(n_k):
                terms = []
                for j in range(n_j):
                    for t, a in branches:
                        load = float(instance.rate(j, t) * p[t, a]) / 60.0
                        if load == 0.0:
                            continue
                        terms.append((tau[(i, j, k, t, a)], load))
                        terms.append((tauh[(i, j, k, t, a)], load))
                for n in range(1, types[k].fleet_size + 1):
                    terms.append((z[(i, k, n)], -marginal[n - 1]))
                b.row(
                    f"avail:{station_ids[i]}:{type_ids[k]}",
                    terms,
                    "<=",
                    0.0,
                    "availability_capacity",
                )

    # ---- coverage ------------------------------------------------------
    if options.coverage:
        for j in range(n_j):
            in_reach = [
                (i, k)
                for i in range(n_i)
                for k in range(n_k)
                if travel[i, j] <= threshold + 1e-9
            ]
            for t in range(len(believed)):
                b.row(
                    f"cover:{node_ids[j]}:{believed[t]}",
                    [(y[(i, j, k, t)], 1.0) for i, k in in_reach],
                    ">=",
                    1.0,
                    "coverage",
                )

    # ---- strategy restrictions ----------------------------------------
    if options.strategy is Strategy.SINGLE_RESPONSE:
        for j in range(n_j):
            for t in range(len(believed)):
                b.row(
                    f"sr:{node_ids[j]}:{believed[t]}",
                    [
                        (y[(i, j, k, t)], 1.0)
                        for i in range(n_i)
                        for k in range(n_k)
                    ],
                    "<=",
                    1.0,
                    "single_response_limit",
                )
    if not allow_secondary:
        extra_families = extra_families + ("no_secondary",)

    return b.finish(extra_families)


def build_fleet_sizing_model(
    instance: ScenarioInstance,
    alpha: float | None = None,
    coverage_threshold: float | None = None,
    max_units_per_station: int | None = None,
) -> tuple[MipModel, VariableIndex]:
    """Minimum-fleet calibration model with a pooled unit type.

    Every demand node is assigned to exactly one station within the
    coverage threshold; each station's offered load (all calls served on
    the ED pathway) must fit the Erlang-loss capacity of its units.  The
    objective minimizes the total unit count, encoded as maximizing its
    negation since MipModel is a maximization container.
    """
    diagnostics = validate(instance)
    if diagnostics:
        raise BuildError(diagnostics)
    alpha = instance.alpha if alpha is None else alpha
    threshold = (
        instance.coverage_threshold
        if coverage_threshold is None
        else coverage_threshold
    )
    n_i = instance.n_stations
    n_j = instance.n_nodes
    travel = instance.travel.minutes

    uncovered = [
        instance.demand_nodes[j].id
        for j in range(n_j)
        if not any(travel[i, j] <= threshold + 1e-9 for i in range(n_i))
    ]
    if uncovered:
        raise BuildError(
            [
                f"node {nid!r} has no station within coverage threshold "
                f"{threshold:g} min"
                for nid in uncovered
            ]
        )

    # per-assignment offered load: node rate x ED-pathway service time
    ed_minutes = np.zeros((n_i, n_j))
    node_rate = np.zeros(n_j)
    for j, node in enumerate(instance.demand_nodes):
        node_rate[j] = sum(node.rates_per_hour)
        for i in range(n_i):
            menu = instance.catalog.menu(i, j, 0, instance.actual.index("ed"))
            ed_minutes[i, j] = menu.spec(Action.TRANSPORT_ED).minutes

    if max_units_per_station is None:
        total_load = float(
            sum(
                node_rate[j] / 60.0 * max(ed_minutes[:, j])
                for j in range(n_j)
            )
        )
        schedule = capacity_schedule(alpha, d_max=50)
        try:
            max_units_per_station = schedule.units_needed(total_load) + 1
        except ValueError:
            max_units_per_station = schedule.d_max
    schedule = capacity_schedule(alpha, d_max=max(1, max_units_per_station))
    marginal = schedule.marginal

    b = _Builder()
    station_ids = [s.id for s in instance.stations]
    node_ids = [n.id for n in instance.demand_nodes]

    zvars: dict[tuple[int, int], int] = {}
    for i in range(n_i):
        for n in range(1, max_units_per_station + 1):
            zvars[(i, n)] = b.var(BINARY, 0.0, 1.0, "z", station_ids[i], "pool", n)
            b.add_objective(zvars[(i, n)], -1.0)

    avars: dict[tuple[int, int], int] = {}
    for i in range(n_i):
        for j in range(n_j):
            if travel[i, j] <= threshold + 1e-9:
                avars[(i, j)] = b.var(
                    BINARY, 0.0, 1.0, "y", station_ids[i], node_ids[j]
                )

    for i in range(n_i):
        for n in range(2, max_units_per_station + 1):
            b.row(
                f"order:{station_ids[i]}:pool:{n}",
                [(zvars[(i, n)], 1.0), (zvars[(i, n - 1)], -1.0)],
                "<=",
                0.0,
                "station_ordering",
            )

    for j in range(n_j):
        terms = [
            (avars[(i, j)], 1.0) for i in range(n_i) if (i, j) in avars
        ]
        b.row(f"assign:{node_ids[j]}", terms, "=", 1.0, "coverage")

    for (i, j), av in avars.items():
        b.row(
            f"link_y:{station_ids[i]}:{node_ids[j]}",
            [(av, 1.0), (zvars[(i, 1)], -1.0)],
            "<=",
            0.0,
            "dispatch_requires_unit",
        )

    for i in range(n_i):
        terms = [
            (avars[(i, j)], node_rate[j] / 60.0 * ed_minutes[i, j])
            for j in range(n_j)
            if (i, j) in avars
        ]
        for n in range(1, max_units_per_station + 1):
            terms.append((zvars[(i, n)], -marginal[n - 1]))
        b.row(
            f"avail:{station_ids[i]}:pool",
            terms,
            "<=",
            0.0,
            "availability_capacity",
        )

    return b.finish(("availability_membership",))
