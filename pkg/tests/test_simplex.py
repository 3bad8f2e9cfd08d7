"""Bounded-variable simplex against a vertex-enumeration oracle."""
from __future__ import annotations

import numpy as np
import pytest

from emsdivert.model import CONTINUOUS, Constraint, MipModel, Variable
from emsdivert.solver.simplex import (
    reoptimize,
    solve_lp,
    solve_workspace,
    standard_form,
)
from oracles import lp_vertex_optimum


def box_lp_model(a_ub, b_ub, lower, upper, c) -> MipModel:
    """Wrap dense <= rows plus a box into the model container."""
    a_ub = np.asarray(a_ub, dtype=float)
    n = a_ub.shape[1]
    variables = [
        Variable(f"v:{i}", CONTINUOUS, float(lower[i]), float(upper[i]))
        for i in range(n)
    ]
    constraints = [
        Constraint(
            f"r:{r}",
            tuple((j, float(a_ub[r, j])) for j in range(n) if a_ub[r, j] != 0.0),
            "<=",
            float(b_ub[r]),
            "imported",
        )
        for r in range(a_ub.shape[0])
    ]
    objective = tuple((i, float(c[i])) for i in range(n) if c[i] != 0.0)
    return MipModel(variables, constraints, objective)


def test_tiny_known_optimum():
    model = box_lp_model(
        [[1.0, 1.0]], [1.5], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]
    )
    out = solve_lp(standard_form(model))
    assert out.status == "optimal"
    assert out.objective == pytest.approx(1.5)
    assert out.x[:2].sum() == pytest.approx(1.5)


def test_equality_row():
    model = box_lp_model(
        np.zeros((0, 2)), np.empty(0), [0.0, 0.0], [1.0, 1.0], [1.0, 0.0]
    )
    model.constraints.append(
        Constraint("eq", ((0, 1.0), (1, 1.0)), "=", 0.7, "imported")
    )
    out = solve_lp(standard_form(model))
    assert out.status == "optimal"
    assert out.objective == pytest.approx(0.7)
    assert out.x[0] == pytest.approx(0.7)
    assert out.x[1] == pytest.approx(0.0)


def test_infeasible_box():
    model = box_lp_model(
        [[1.0], [-1.0]], [0.2, -0.8], [0.0], [1.0], [1.0]
    )  # x <= 0.2 and x >= 0.8
    out = solve_lp(standard_form(model))
    assert out.status == "infeasible"
    assert out.x is None


def test_unbounded_direction():
    model = MipModel(
        [
            Variable("v:0", CONTINUOUS, 0.0, float("inf")),
            Variable("v:1", CONTINUOUS, 0.0, 1.0),
        ],
        [Constraint("r:0", ((1, 1.0),), "<=", 1.0, "imported")],
        ((0, 1.0),),
    )
    out = solve_lp(standard_form(model))
    assert out.status == "unbounded"
    assert out.objective == np.inf


def random_box_instance(rng, n, m):
    lower = rng.uniform(-1.0, 0.0, n)
    upper = lower + rng.uniform(0.5, 2.0, n)
    a_ub = rng.uniform(-2.0, 2.0, (m, n))
    b_ub = rng.uniform(-0.5, 2.5, m)
    c = rng.uniform(-1.0, 1.0, n)
    return a_ub, b_ub, lower, upper, c


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(42)
    solved = 0
    infeasible = 0
    for trial in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 5))
        a_ub, b_ub, lower, upper, c = random_box_instance(rng, n, m)
        oracle = lp_vertex_optimum(a_ub, b_ub, lower, upper, c)
        out = solve_lp(standard_form(box_lp_model(a_ub, b_ub, lower, upper, c)))
        if oracle is None:
            assert out.status == "infeasible", trial
            infeasible += 1
        else:
            assert out.status == "optimal", trial
            assert out.objective == pytest.approx(oracle, abs=1e-7), trial
            solved += 1
    assert solved >= 20  # the corpus must actually exercise the solver
    assert infeasible >= 1


def test_warm_start_reaches_same_optimum():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, m = 4, 3
        a_ub, b_ub, lower, upper, c = random_box_instance(rng, n, m)
        lp = standard_form(box_lp_model(a_ub, b_ub, lower, upper, c))
        first = solve_lp(lp)
        if first.status != "optimal":
            continue
        # tighten one structural bound, then warm- and cold-solve
        lo = lp.lower.copy()
        up = lp.upper.copy()
        j = int(rng.integers(0, n))
        up[j] = 0.5 * (lo[j] + up[j])
        warm = solve_lp(lp, lo.copy(), up.copy(), first.basis, first.vstat)
        cold = solve_lp(lp, lo.copy(), up.copy())
        assert warm.status == cold.status
        if warm.status == "optimal":
            assert warm.objective == pytest.approx(cold.objective, abs=1e-8)


def test_workspace_survives_repeated_bound_edits():
    rng = np.random.default_rng(17)
    n, m = 4, 3
    a_ub, b_ub, lower, upper, c = random_box_instance(rng, n, m)
    lp = standard_form(box_lp_model(a_ub, b_ub, lower, upper, c))
    status, ws = solve_workspace(lp, lp.lower.copy(), lp.upper.copy())
    assert status == "optimal"
    base_obj = float(lp.c @ ws.x)
    original_upper = ws.upper[:n].copy()

    # pin each structural variable to its lower bound and back again;
    # the tableau must stay valid across every edit
    for j in range(n):
        ws.upper[j] = ws.lower[j]
        assert reoptimize(ws) in ("optimal", "infeasible")
        ws.upper[j] = original_upper[j]
        assert reoptimize(ws) == "optimal"
        assert float(lp.c @ ws.x) == pytest.approx(base_obj, abs=1e-8)

    cold = solve_lp(lp)
    assert float(lp.c @ ws.x) == pytest.approx(cold.objective, abs=1e-8)


def test_workspace_edits_match_cold_solves():
    rng = np.random.default_rng(29)
    matched = 0
    for _ in range(8):
        n, m = 5, 4
        a_ub, b_ub, lower, upper, c = random_box_instance(rng, n, m)
        lp = standard_form(box_lp_model(a_ub, b_ub, lower, upper, c))
        status, ws = solve_workspace(lp, lp.lower.copy(), lp.upper.copy())
        if status != "optimal":
            continue
        for _edit in range(6):
            j = int(rng.integers(0, n))
            mid = 0.5 * (ws.lower[j] + ws.upper[j])
            if rng.random() < 0.5:
                ws.upper[j] = mid
            else:
                ws.lower[j] = mid
            status = reoptimize(ws)
            cold = solve_lp(lp, ws.lower.copy(), ws.upper.copy())
            assert status == cold.status
            if status == "optimal":
                assert float(lp.c @ ws.x) == pytest.approx(
                    cold.objective, abs=1e-8
                )
                matched += 1
            else:
                break
    assert matched >= 10


def test_iteration_limit_reports_limit_status():
    rng = np.random.default_rng(8)
    a_ub, b_ub, lower, upper, c = random_box_instance(rng, 5, 4)
    lp = standard_form(box_lp_model(a_ub, b_ub, lower, upper, c))
    out = solve_lp(lp, iter_limit=1)
    assert out.status in ("limit", "optimal", "infeasible")
