"""Solver front end: exact internal branch-and-bound at desk scale, a
HiGHS backend for larger models, external solution-file parsing, and the
progressive (restriction first) warm-start scheme.

Every returned assignment is re-verified against the model within 1e-6
regardless of which backend produced it.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from ..lp_io import read_solution_text
from ..model import (
    BuildOptions,
    MipModel,
    Strategy,
    VariableIndex,
    build_extensive_form,
)
from .bnb import BnbResult, branch_and_bound
from .highs import solve_highs

#: models at or below these sizes go to the internal solver under AUTO
AUTO_INTERNAL_MAX_VARS = 1500
AUTO_INTERNAL_MAX_ROWS = 1200


class Backend(enum.Enum):
    INTERNAL = "internal"
    HIGHS = "highs"
    EXTERNAL_FILE = "external-file"
    AUTO = "auto"


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap_reached"
    TIME_LIMIT = "time_limit"
    INFEASIBLE = "infeasible"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveParams:
    absolute_gap_target: float = 0.01
    time_limit: float | None = None  # seconds
    node_limit: int | None = None
    backend: Backend = Backend.AUTO
    solution_file: str | None = None  # EXTERNAL_FILE backend input

    def __post_init__(self) -> None:
        if self.absolute_gap_target < 0:
            raise ValueError("gap target must be nonnegative")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node limit must be positive")


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float
    assignment: np.ndarray | None
    bound: float
    gap: float
    nodes: int
    wall_seconds: float
    backend: str
    progressive_stages: tuple[dict, ...] = ()

    def require_assignment(self) -> np.ndarray:
        if self.assignment is None:
            raise SolverError(f"no assignment available (status {self.status.value})")
        return self.assignment


def _resolve_backend(model: MipModel, params: SolveParams) -> Backend:
    if params.backend is not Backend.AUTO:
        return params.backend
    if (
        model.n_variables <= AUTO_INTERNAL_MAX_VARS
        and model.n_constraints <= AUTO_INTERNAL_MAX_ROWS
    ):
        return Backend.INTERNAL
    return Backend.HIGHS


def _verify(model: MipModel, result: SolveResult) -> SolveResult:
    if result.status is SolveStatus.INFEASIBLE or result.assignment is None:
        return result
    problems = model.check_assignment(result.assignment)
    if problems:
        raise SolverError(
            "solver returned an infeasible assignment: " + problems[0]
        )
    return result


def _warm_vector(model: MipModel) -> np.ndarray | None:
    if model.warm_start is None:
        return None
    x = np.zeros(model.n_variables)
    for vid, value in model.warm_start.items():
        x[vid] = value
    return x


def solve(model: MipModel, params: SolveParams | None = None) -> SolveResult:
    """Maximize the model with the configured backend."""
    params = params or SolveParams()
    backend = _resolve_backend(model, params)

    if backend is Backend.INTERNAL:
        out = branch_and_bound(
            model,
            gap_target=params.absolute_gap_target,
            time_limit=params.time_limit,
            node_limit=params.node_limit,
            incumbent=_warm_vector(model),
        )
        status = {
            "optimal": SolveStatus.OPTIMAL,
            "gap_reached": SolveStatus.GAP_REACHED,
            "limit": SolveStatus.TIME_LIMIT,
            "infeasible": SolveStatus.INFEASIBLE,
        }[out.status]
        gap = (
            out.bound - out.objective
            if out.assignment is not None
            else float("inf")
        )
        return _verify(
            model,
            SolveResult(
                status,
                out.objective,
                out.assignment,
                out.bound,
                gap,
                out.nodes,
                out.wall_seconds,
                Backend.INTERNAL.value,
            ),
        )

    if backend is Backend.HIGHS:
        t0 = time.perf_counter()
        out = solve_highs(
            model,
            time_limit=params.time_limit,
            node_limit=params.node_limit,
        )
        wall = time.perf_counter() - t0
        if out.status == "infeasible":
            return SolveResult(
                SolveStatus.INFEASIBLE,
                -np.inf,
                None,
                -np.inf,
                float("inf"),
                out.nodes,
                wall,
                Backend.HIGHS.value,
            )
        if out.assignment is None:
            return SolveResult(
                SolveStatus.TIME_LIMIT,
                -np.inf,
                None,
                out.bound,
                float("inf"),
                out.nodes,
                wall,
                Backend.HIGHS.value,
            )
        gap = max(0.0, out.bound - out.objective)
        if out.status == "optimal":
            status = (
                SolveStatus.OPTIMAL
                if gap <= max(1e-9, 1e-9 * abs(out.objective))
                else SolveStatus.GAP_REACHED
            )
        else:
            status = SolveStatus.TIME_LIMIT
        return _verify(
            model,
            SolveResult(
                status,
                out.objective,
                out.assignment,
                out.bound,
                gap,
                out.nodes,
                wall,
                Backend.HIGHS.value,
            ),
        )

    if backend is Backend.EXTERNAL_FILE:
        if params.solution_file is None:
            raise SolverError(
                "backend external-file requires params.solution_file"
            )
        raise SolverError(
            "external-file backend needs the variable index; call "
            "parse_external_solution(model, index, text) instead"
        )

    raise SolverError(f"unknown backend {params.backend!r}")


def solve_progressive(
    instance,
    options: BuildOptions,
    params: SolveParams | None = None,
) -> SolveResult:
    """Solve the single-response restriction first, then the full model.

    The restricted solution is installed as a warm start (the restriction
    only removes decisions, so it stays feasible in the full model).  For
    strategies other than FullDispatch this degenerates to a plain solve.
    Returns the full-model result with per-stage records attached; the
    final objective is never worse than the restricted one.
    """
    params = params or SolveParams()
    full_model, full_index = build_extensive_form(instance, options)
    if options.strategy is not Strategy.FULL_DISPATCH:
        return solve(full_model, params)

    restricted_opts = dc_replace(options, strategy=Strategy.SINGLE_RESPONSE)
    restricted_model, _ = build_extensive_form(instance, restricted_opts)
    restricted = solve(restricted_model, params)

    stages = [
        {
            "stage": "single_response",
            "status": restricted.status.value,
            "objective": restricted.objective
            if restricted.assignment is not None
            else None,
            "nodes": restricted.nodes,
        }
    ]

    if restricted.assignment is not None:
        # same variable layout across strategies: restrictions only add
        # rows and tighten bounds, so the assignment transfers directly
        warm = {
            vid: float(v)
            for vid, v in enumerate(restricted.assignment)
            if v != 0.0
        }
        full_model.warm_start = warm
    result = solve(full_model, params)
    stages.append(
        {
            "stage": "full",
            "status": result.status.value,
            "objective": result.objective
            if result.assignment is not None
            else None,
            "nodes": result.nodes,
        }
    )

    if (
        restricted.assignment is not None
        and result.assignment is not None
        and result.objective < restricted.objective - 1e-9
    ):
        # can only happen with a backend that ignores warm starts and a
        # loose gap; keep the better incumbent
        result = SolveResult(
            restricted.status,
            restricted.objective,
            restricted.assignment,
            max(result.bound, restricted.objective),
            max(result.bound, restricted.objective) - restricted.objective,
            result.nodes,
            result.wall_seconds,
            result.backend,
        )
    result.progressive_stages = tuple(stages)
    return _verify(full_model, result)


def parse_external_solution(
    model: MipModel, index: VariableIndex, text: str
) -> SolveResult:
    """Turn an external solver's name=value file into a verified result.

    Unknown variable names, fractional binaries, and constraint
    violations are rejected with explicit errors; the objective is
    recomputed from the model, never trusted from the file.
    """
    values = read_solution_text(text)
    lp_names = {index.lp_name(vid): vid for vid in range(len(index))}
    assignment = np.zeros(model.n_variables)
    for name, value in values.items():
        vid = lp_names.get(name)
        if vid is None:
            raise SolverError(f"unknown variable name {name!r} in solution file")
        assignment[vid] = value

    for vid in model.binary_ids():
        if abs(assignment[vid] - round(assignment[vid])) > 1e-6:
            raise SolverError(
                f"fractional binary {index.lp_name(vid)} = {assignment[vid]!r}"
            )
        assignment[vid] = round(assignment[vid])

    problems = model.check_assignment(assignment)
    if problems:
        raise SolverError(
            "external solution violates the model: " + "; ".join(problems[:5])
        )
    objective = model.objective_value(assignment)
    return SolveResult(
        SolveStatus.OPTIMAL,
        objective,
        assignment,
        objective,
        0.0,
        0,
        0.0,
        Backend.EXTERNAL_FILE.value,
    )
