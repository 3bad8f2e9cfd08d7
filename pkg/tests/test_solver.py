"""Solver front end: oracle equivalence, backend agreement, warm starts."""
from __future__ import annotations

import time

import numpy as np
import pytest

from emsdivert import (
    Backend,
    BuildOptions,
    SolveParams,
    SolveStatus,
    SolverError,
    Strategy,
    build_extensive_form,
    generate_region,
    parse_external_solution,
    solve,
    solve_progressive,
    write_solution_text,
)
from conftest import random_toy, tiny_instance
from oracles import brute_force_optimum

STRATEGIES = (
    Strategy.FULL_DISPATCH,
    Strategy.MULTIPLE_RESPONSE,
    Strategy.SINGLE_RESPONSE,
)

EXACT = SolveParams(absolute_gap_target=0.0, backend=Backend.INTERNAL)


def test_internal_solver_matches_enumeration_oracle():
    rng = np.random.default_rng(123)
    start = time.perf_counter()
    compared = 0
    for trial in range(24):
        inst = random_toy(rng)
        options = BuildOptions(
            strategy=STRATEGIES[trial % 3],
            availability=False,
            coverage=trial % 2 == 0,
        )
        oracle = brute_force_optimum(inst, options)
        model, _ = build_extensive_form(inst, options)
        result = solve(model, EXACT)
        if oracle is None:
            assert result.status is SolveStatus.INFEASIBLE, trial
        else:
            assert result.status is SolveStatus.OPTIMAL, trial
            assert result.objective == pytest.approx(oracle, abs=1e-7), trial
            assert result.backend == "internal"
        compared += 1
    assert compared == 24
    assert time.perf_counter() - start < 300.0


def test_internal_and_highs_agree_with_availability():
    rng = np.random.default_rng(7)
    agreements = 0
    for trial in range(6):
        inst = random_toy(rng, rate_range=(0.05, 0.6), alpha=0.25)
        options = BuildOptions(
            strategy=STRATEGIES[trial % 3],
            availability=True,
            coverage=trial % 2 == 0,
        )
        model, _ = build_extensive_form(inst, options)
        internal = solve(
            model,
            SolveParams(
                absolute_gap_target=0.0,
                backend=Backend.INTERNAL,
                time_limit=120.0,
            ),
        )
        ext = solve(model, SolveParams(absolute_gap_target=0.0, backend=Backend.HIGHS))
        assert (internal.status is SolveStatus.INFEASIBLE) == (
            ext.status is SolveStatus.INFEASIBLE
        ), trial
        if internal.status is not SolveStatus.INFEASIBLE:
            assert internal.objective == pytest.approx(ext.objective, abs=1e-6), trial
            agreements += 1
    assert agreements >= 2


def test_strategy_dominance():
    rng = np.random.default_rng(55)
    checked = 0
    for trial in range(10):
        inst = random_toy(rng)
        availability = trial % 2 == 1
        objectives = {}
        for strategy in STRATEGIES:
            options = BuildOptions(strategy=strategy, availability=availability)
            model, _ = build_extensive_form(inst, options)
            result = solve(model, EXACT)
            objectives[strategy] = (
                result.objective
                if result.status is not SolveStatus.INFEASIBLE
                else None
            )
        full = objectives[Strategy.FULL_DISPATCH]
        multi = objectives[Strategy.MULTIPLE_RESPONSE]
        single = objectives[Strategy.SINGLE_RESPONSE]
        # each restriction can lose feasibility but never gain objective
        if multi is not None:
            assert full is not None and full >= multi - 1e-9
        if single is not None:
            assert multi is not None and multi >= single - 1e-9
            checked += 1
    assert checked >= 3


def test_progressive_stages_and_warm_start_validity():
    rng = np.random.default_rng(91)
    exercised = 0
    for _ in range(8):
        inst = random_toy(rng, rate_range=(0.05, 0.5), alpha=0.25)
        options = BuildOptions(strategy=Strategy.FULL_DISPATCH, availability=True)
        restricted_model, _ = build_extensive_form(
            inst, BuildOptions(strategy=Strategy.SINGLE_RESPONSE, availability=True)
        )
        restricted = solve(restricted_model, EXACT)
        if restricted.status is SolveStatus.INFEASIBLE:
            continue

        # the restricted optimum must satisfy the unrestricted model
        full_model, _ = build_extensive_form(inst, options)
        assert full_model.check_assignment(restricted.assignment) == []

        progressive = solve_progressive(inst, options, EXACT)
        cold = solve(full_model, EXACT)
        assert progressive.status is SolveStatus.OPTIMAL
        assert progressive.objective >= restricted.objective - 1e-9
        assert progressive.objective == pytest.approx(cold.objective, abs=1e-7)
        stages = progressive.progressive_stages
        assert [s["stage"] for s in stages] == ["single_response", "full"]
        assert stages[0]["objective"] <= stages[1]["objective"] + 1e-9
        exercised += 1
    assert exercised >= 2


def test_progressive_degenerates_for_restricted_strategies():
    inst = tiny_instance()
    options = BuildOptions(strategy=Strategy.SINGLE_RESPONSE, availability=False)
    result = solve_progressive(inst, options, EXACT)
    assert result.progressive_stages == ()
    direct_model, _ = build_extensive_form(inst, options)
    direct = solve(direct_model, EXACT)
    assert result.objective == pytest.approx(direct.objective, abs=1e-9)


def test_auto_backend_picks_internal_for_small_models():
    inst = tiny_instance()
    model, _ = build_extensive_form(inst, BuildOptions(availability=False))
    result = solve(model, SolveParams(backend=Backend.AUTO))
    assert result.backend == "internal"


def test_auto_backend_picks_highs_for_large_models(urban_small_instance):
    model, _ = build_extensive_form(
        urban_small_instance, BuildOptions(availability=True, coverage=True)
    )
    assert model.n_variables > 1500
    result = solve(model, SolveParams(backend=Backend.AUTO, absolute_gap_target=0.001))
    assert result.backend == "highs"
    assert result.status in (SolveStatus.OPTIMAL, SolveStatus.GAP_REACHED)


def test_external_solution_round_trip():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=False))
    direct = solve(model, EXACT)
    text = write_solution_text(model, index, direct.assignment)
    parsed = parse_external_solution(model, index, text)
    assert parsed.status is SolveStatus.OPTIMAL
    assert parsed.backend == "external-file"
    assert parsed.gap == 0.0
    assert parsed.objective == pytest.approx(direct.objective, abs=1e-9)
    assert model.check_assignment(parsed.assignment) == []


def test_external_solution_rejects_bad_input():
    inst = tiny_instance()
    model, index = build_extensive_form(inst, BuildOptions(availability=False))
    with pytest.raises(SolverError, match="unknown variable"):
        parse_external_solution(model, index, "not_a_variable 1.0\n")
    with pytest.raises(SolverError, match="fractional binary"):
        parse_external_solution(model, index, f"{index.lp_name(0)} 0.5\n")
    # all-zero assignment violates the satisfy-exactly-once rows
    with pytest.raises(SolverError, match="violates the model"):
        parse_external_solution(model, index, "")


def test_solve_params_validation():
    with pytest.raises(ValueError):
        SolveParams(absolute_gap_target=-0.1)
    with pytest.raises(ValueError):
        SolveParams(time_limit=0.0)
    with pytest.raises(ValueError):
        SolveParams(node_limit=0)


def test_external_backend_via_solve_raises():
    inst = tiny_instance()
    model, _ = build_extensive_form(inst, BuildOptions(availability=False))
    with pytest.raises(SolverError):
        solve(model, SolveParams(backend=Backend.EXTERNAL_FILE))
    with pytest.raises(SolverError):
        solve(
            model,
            SolveParams(backend=Backend.EXTERNAL_FILE, solution_file="sol.txt"),
        )


def test_require_assignment_raises_when_infeasible():
    inst = tiny_instance(rates=[(60.0, 60.0)], alpha=0.01)
    model, _ = build_extensive_form(inst, BuildOptions(availability=True))
    result = solve(model, EXACT)
    assert result.status is SolveStatus.INFEASIBLE
    assert result.assignment is None
    with pytest.raises(SolverError):
        result.require_assignment()


def test_node_limit_is_respected():
    rng = np.random.default_rng(7)
    inst = random_toy(rng, rate_range=(0.05, 0.6), alpha=0.25)
    options = BuildOptions(strategy=Strategy.FULL_DISPATCH, availability=True, coverage=True)
    model, _ = build_extensive_form(inst, options)
    result = solve(
        model,
        SolveParams(absolute_gap_target=0.0, backend=Backend.INTERNAL, node_limit=3),
    )
    assert result.nodes <= 4  # limit plus the node in flight
