"""Extensive-form MILP builder: layout, families, strategies, audit tags."""
from __future__ import annotations

import numpy as np
import pytest

from emsdivert import (
    Action,
    BuildError,
    BuildOptions,
    Strategy,
    build_extensive_form,
    build_fleet_sizing_model,
)
from emsdivert.model import EQUATION_TAGS
from conftest import make_instance, tiny_instance


def var_prefix_counts(model):
    counts: dict[str, int] = {}
    for v in model.variables:
        head = v.name.split(":")[0]
        counts[head] = counts.get(head, 0) + 1
    return counts


def family_counts(model):
    counts: dict[str, int] = {}
    for c in model.constraints:
        counts[c.family] = counts.get(c.family, 0) + 1
    return counts


def test_variable_counts_follow_menu_structure():
    # 1 station, 1 node, two unit types with one unit each, all six
    # (believed, actual) branches active.  Derived by hand from the menu
    # rules: traditional menus carry {ED, SUPPORT}; capable menus carry
    # 2/3/4 actions for actual ed/ad/tip.
    inst = tiny_instance()
    model, _ = build_extensive_form(inst, BuildOptions(availability=True))
    assert var_prefix_counts(model) == {
        "z": 2,
        "y": 4,
        "x": 30,
        "xh": 18,
        "yh": 12,
        "tau": 12,
        "tauh": 12,
    }
    assert model.n_variables == 90
    assert model.n_constraints == 74

    model, _ = build_extensive_form(inst, BuildOptions(availability=False))
    assert model.n_variables == 66
    assert model.n_constraints == 48
    assert "tau" not in var_prefix_counts(model)


def test_variable_blocks_come_in_stage_order():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=True))
    order = {"z": 0, "y": 1, "x": 2, "yh": 3, "xh": 3, "tau": 4, "tauh": 4}
    ranks = [order[v.name.split(":")[0]] for v in model.variables]
    assert ranks == sorted(ranks)
    assert index.key_of(0).startswith("z:")
    assert len(index) == model.n_variables


def test_zero_probability_branches_are_omitted():
    p = [[0.7, 0.3, 0.0], [0.2, 0.3, 0.5]]
    inst = tiny_instance(p=p)
    model, index = build_extensive_form(inst, BuildOptions(availability=True))
    # the (likely_eligible, tip) branch has zero probability: no secondary
    # dispatch, action, or service-time variables may exist for it
    assert "yh:S1:N1:cap:likely_eligible:tip" not in index
    assert "tau:S1:N1:cap:likely_eligible:tip" not in index
    assert "yh:S1:N1:cap:likely_not_eligible:tip" in index
    once_rows = [c for c in model.constraints if c.name.startswith("once:")]
    assert len(once_rows) == 5  # six cells minus the zero-probability one


def test_constraint_families_and_senses():
    inst = tiny_instance()
    model, _ = build_extensive_form(inst, BuildOptions(availability=True))
    fams = family_counts(model)
    assert fams["fleet_budget"] == 2
    assert fams["satisfy_exactly_once"] == 6
    assert fams["availability_capacity"] == 2
    assert fams["service_time_floor"] == 12
    assert fams["recourse_service_time"] == 12
    for c in model.constraints:
        if c.family in ("satisfy_exactly_once", "primary_action_link",
                        "recourse_action_link", "recourse_service_time"):
            assert c.sense == "="
        elif c.family == "coverage":
            assert c.sense == ">="
        else:
            assert c.sense == "<="


def test_station_ordering_rows_need_multiple_units():
    inst = tiny_instance(fleet=(2, 3))
    model, _ = build_extensive_form(inst, BuildOptions(availability=False))
    fams = family_counts(model)
    # one ordering row per extra unit of each type: (2-1) + (3-1)
    assert fams["station_ordering"] == 3
    assert var_prefix_counts(model)["z"] == 5


def test_full_dispatch_leaves_secondary_free():
    inst = tiny_instance()
    model, _ = build_extensive_form(
        inst, BuildOptions(strategy=Strategy.FULL_DISPATCH, availability=False)
    )
    uppers = {v.upper for v in model.variables if v.name.split(":")[0] in ("yh", "xh")}
    assert uppers == {1.0}
    assert "no_secondary" not in model.present_families()


def test_restricted_strategies_pin_secondary_to_zero():
    inst = tiny_instance()
    for strategy in (Strategy.MULTIPLE_RESPONSE, Strategy.SINGLE_RESPONSE):
        model, _ = build_extensive_form(
            inst, BuildOptions(strategy=strategy, availability=False)
        )
        uppers = {
            v.upper for v in model.variables if v.name.split(":")[0] in ("yh", "xh")
        }
        assert uppers == {0.0}
        fams = model.present_families()
        assert fams["no_secondary"] == "R.no_secondary"
        sr_rows = [c for c in model.constraints if c.family == "single_response_limit"]
        if strategy is Strategy.SINGLE_RESPONSE:
            assert len(sr_rows) == 2  # one per (node, believed)
            assert fams["single_response_limit"] == "R.single_response"
        else:
            assert sr_rows == []


def test_coverage_rows_and_unreachable_node():
    inst = make_instance(
        station_positions=[(0.0, 0.0)],
        node_positions=[(1.0, 0.0), (2.0, 0.0)],
        rates=[(0.2, 0.2), (0.2, 0.2)],
    )
    model, _ = build_extensive_form(
        inst, BuildOptions(availability=False, coverage=True)
    )
    cover = [c for c in model.constraints if c.family == "coverage"]
    assert len(cover) == 4
    assert all(c.sense == ">=" and c.rhs == 1.0 for c in cover)

    with pytest.raises(BuildError) as err:
        build_extensive_form(
            inst,
            BuildOptions(availability=False, coverage=True, coverage_threshold=1.0),
        )
    assert any("coverage threshold" in d for d in err.value.diagnostics)


def test_build_rejects_invalid_instance():
    inst = tiny_instance().replace(alpha=2.0)
    with pytest.raises(BuildError):
        build_extensive_form(inst, BuildOptions())


def test_audit_reports_every_constraint_family():
    inst = tiny_instance(fleet=(2, 2))
    model, _ = build_extensive_form(
        inst,
        BuildOptions(
            strategy=Strategy.FULL_DISPATCH, availability=True, coverage=True
        ),
    )
    tags = set(model.present_families().values())
    wanted = {f"A.{n}" for n in range(2, 18)}
    assert wanted <= tags


def test_check_assignment_accepts_hand_built_solution():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=False))
    assignment = np.zeros(model.n_variables)
    assignment[index.id_of("z:S1:cap:1")] = 1.0
    for believed in inst.believed:
        assignment[index.id_of(f"y:S1:N1:cap:{believed}")] = 1.0
        for act in inst.actual:
            assignment[
                index.id_of(f"x:S1:N1:cap:{believed}:{act}:transport_ed")
            ] = 1.0
    assert model.check_assignment(assignment) == []

    expected = 0.0  # ED transports never count as diversions
    assert model.objective_value(assignment) == expected


def test_check_assignment_reports_violations_by_name():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=False))
    empty = np.zeros(model.n_variables)
    problems = model.check_assignment(empty)
    assert problems
    assert any(p.startswith("constraint once:") for p in problems)

    # dispatching without an allocated unit trips the linking row
    bad = np.zeros(model.n_variables)
    bad[index.id_of(f"y:S1:N1:trad:{inst.believed[0]}")] = 1.0
    problems = model.check_assignment(bad)
    assert any("link_y:" in p for p in problems)


def test_objective_counts_diverting_actions():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=False))
    assignment = np.zeros(model.n_variables)
    tip_idx = inst.actual.index("tip")
    vid = index.id_of(f"x:S1:N1:cap:{inst.believed[0]}:tip:treat_in_place")
    assignment[vid] = 1.0
    p = inst.condition_model.p
    expected = inst.rate(0, 0) * p[0, tip_idx]
    assert model.objective_value(assignment) == pytest.approx(expected)


def test_fleet_sizing_model_structure():
    inst = make_instance(
        station_positions=[(0.0, 0.0), (4.0, 0.0)],
        node_positions=[(1.0, 0.0), (3.0, 0.0)],
        rates=[(0.1, 0.1), (0.1, 0.1)],
        coverage_threshold=50.0,
    )
    model, index = build_fleet_sizing_model(inst, max_units_per_station=3)
    prefixes = var_prefix_counts(model)
    assert prefixes == {"z": 6, "y": 4}
    assert index.parts(index.id_of("z:S1:pool:1")) == ("z", "S1", "pool", "1")
    # objective minimizes units: every z coefficient is -1
    assert all(coef == -1.0 for _, coef in model.objective)
    fams = model.present_families()
    assert fams["coverage"] == "A.13"
    assert fams["availability_membership"] == "A.12"
    assign_rows = [c for c in model.constraints if c.family == "coverage"]
    assert all(c.sense == "=" and c.rhs == 1.0 for c in assign_rows)


def test_fleet_sizing_respects_threshold():
    inst = make_instance(
        station_positions=[(0.0, 0.0), (40.0, 0.0)],
        node_positions=[(1.0, 0.0)],
        rates=[(0.1, 0.1)],
        coverage_threshold=20.0,
    )
    model, index = build_fleet_sizing_model(inst, max_units_per_station=2)
    assert "y:S1:N1" in index
    assert "y:S2:N1" not in index
