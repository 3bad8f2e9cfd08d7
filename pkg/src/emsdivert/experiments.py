"""Experiment drivers: sweeps over fleet composition, dispatch strategy,
and screening accuracy, each cell solved to a plan and then simulated.

A cell is one (instance variant, strategy) pair.  Rows carry both the
planning objective (expected diversions per hour) and the simulated
diversion-rate statistics; the fleet sweep additionally normalizes each
mean against the same region's all-capable FullDispatch value, which is
the "percent of potential diversions" scale.

Cells are independent; the worker count (EMSDIVERT_WORKERS or the
workers argument) controls thread parallelism.  Aggregation order is
fixed, so results are deterministic regardless of worker count.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace as dc_replace

from .domain import Capability, ScenarioInstance
from .model import BuildError, BuildOptions, Strategy, build_extensive_form
from .plans import extract_solution
from .scenario import (
    SCREENING_SCENARIOS,
    apply_screening,
    fleet_composition_sweep,
)
from .sim import SimConfig, simulate
from .solver import SolveParams, SolverError, solve, solve_progressive

WORKERS_ENV = "EMSDIVERT_WORKERS"


@dataclass
class ExperimentRow:
    """One experiment cell: a solved and simulated configuration."""

    region: str
    screening: str
    strategy: str
    capable_units: int
    total_units: int
    solve_status: str
    objective: float | None = None
    bound: float | None = None
    mean_diversion_rate: float | None = None
    std_error: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    calls_mean: float | None = None
    unserved_mean: float | None = None
    fallback_mean: float | None = None
    percent_of_potential: float | None = None
    note: str = ""


CSV_COLUMNS = [
    "region",
    "screening",
    "strategy",
    "capable_units",
    "total_units",
    "solve_status",
    "objective",
    "bound",
    "mean_diversion_rate",
    "std_error",
    "ci_low",
    "ci_high",
    "calls_mean",
    "unserved_mean",
    "fallback_mean",
    "percent_of_potential",
    "note",
]


def default_build_options() -> BuildOptions:
    """Experiments keep both constraint families on: the first stage must
    cover every node and respect the availability guarantee."""
    return BuildOptions(availability=True, coverage=True)


def _capable_count(instance: ScenarioInstance) -> int:
    return sum(
        u.fleet_size
        for u in instance.unit_types
        if u.capability is Capability.DIVERSION_CAPABLE
    )


def _total_count(instance: ScenarioInstance) -> int:
    return sum(u.fleet_size for u in instance.unit_types)


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def evaluate_cell(
    instance: ScenarioInstance,
    strategy: Strategy,
    options: BuildOptions,
    params: SolveParams,
    sim_config: SimConfig,
) -> ExperimentRow:
    """Solve one configuration and simulate the resulting plan."""
    row = ExperimentRow(
        region=str(instance.meta.get("archetype", instance.name)),
        screening=str(instance.meta.get("screening", "realistic")),
        strategy=strategy.value,
        capable_units=_capable_count(instance),
        total_units=_total_count(instance),
        solve_status="missing",
    )
    opts = dc_replace(options, strategy=strategy)
    try:
        if strategy is Strategy.FULL_DISPATCH:
            result = solve_progressive(instance, opts, params)
        else:
            model, _ = build_extensive_form(instance, opts)
            result = solve(model, params)
    except (BuildError, SolverError) as exc:
        row.solve_status = "error"
        row.note = str(exc)
        return row

    row.solve_status = result.status.value
    row.objective = result.objective
    row.bound = result.bound
    if result.assignment is None:
        row.note = "no incumbent available"
        return row

    _, index = build_extensive_form(instance, opts)
    plan, policy = extract_solution(instance, index, result.assignment)
    report = simulate(instance, plan, policy, sim_config)
    lo, hi = report.ci95
    row.mean_diversion_rate = report.mean_diversion_rate
    row.std_error = report.std_error
    row.ci_low = lo
    row.ci_high = hi
    n = len(report.replications)
    row.calls_mean = sum(r.calls for r in report.replications) / n
    row.unserved_mean = sum(r.unserved for r in report.replications) / n
    row.fallback_mean = sum(r.fallbacks for r in report.replications) / n
    return row


def run_experiment(
    instances: list[ScenarioInstance],
    strategies: list[Strategy],
    sim_config: SimConfig | None = None,
    params: SolveParams | None = None,
    options: BuildOptions | None = None,
    normalize: bool = False,
    workers: int | None = None,
) -> list[ExperimentRow]:
    """Evaluate every (instance, strategy) cell; optionally normalize.

    Failed cells are reported in place (solve_status/note), never raised.
    Normalization divides each simulated mean by the same (region,
    screening) group's all-capable FullDispatch mean when that cell is
    present and positive.
    """
    sim_config = sim_config or SimConfig()
    params = params or SolveParams()
    options = options or default_build_options()
    cells = [
        (instance, strategy)
        for instance in instances
        for strategy in strategies
    ]

    n_workers = resolve_workers(workers)
    if n_workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(
                pool.map(
                    lambda cell: evaluate_cell(
                        cell[0], cell[1], options, params, sim_config
                    ),
                    cells,
                )
            )
    else:
        rows = [
            evaluate_cell(instance, strategy, options, params, sim_config)
            for instance, strategy in cells
        ]

    if normalize:
        add_percent_of_potential(rows)
    return rows


def add_percent_of_potential(rows: list[ExperimentRow]) -> None:
    """Fill percent_of_potential against each group's all-capable
    FullDispatch mean (groups are (region, screening))."""
    reference: dict[tuple[str, str], float] = {}
    for row in rows:
        if (
            row.strategy == Strategy.FULL_DISPATCH.value
            and row.capable_units == row.total_units
            and row.mean_diversion_rate is not None
            and row.mean_diversion_rate > 0
        ):
            reference[(row.region, row.screening)] = row.mean_diversion_rate
    for row in rows:
        base = reference.get((row.region, row.screening))
        if base is not None and row.mean_diversion_rate is not None:
            row.percent_of_potential = 100.0 * row.mean_diversion_rate / base


def fleet_sweep(
    instance: ScenarioInstance,
    counts: list[int],
    sim_config: SimConfig | None = None,
    params: SolveParams | None = None,
    options: BuildOptions | None = None,
    strategies: list[Strategy] | None = None,
    workers: int | None = None,
) -> list[ExperimentRow]:
    """Diversions versus diversion-capable share at constant total fleet.

    The all-capable composition is appended when absent so the percent
    scale always has its reference point.
    """
    total = _total_count(instance)
    wanted = sorted(set(counts) | {total})
    variants = fleet_composition_sweep(instance, wanted)
    return run_experiment(
        variants,
        strategies or [Strategy.FULL_DISPATCH],
        sim_config,
        params,
        options,
        normalize=True,
        workers=workers,
    )


def dispatch_compare(
    instance: ScenarioInstance,
    counts: list[int],
    sim_config: SimConfig | None = None,
    params: SolveParams | None = None,
    options: BuildOptions | None = None,
    workers: int | None = None,
) -> list[ExperimentRow]:
    """All three dispatch strategies across fleet compositions."""
    variants = fleet_composition_sweep(instance, sorted(set(counts)))
    return run_experiment(
        variants,
        [Strategy.FULL_DISPATCH, Strategy.MULTIPLE_RESPONSE, Strategy.SINGLE_RESPONSE],
        sim_config,
        params,
        options,
        normalize=False,
        workers=workers,
    )


def screening_compare(
    instance: ScenarioInstance,
    sim_config: SimConfig | None = None,
    params: SolveParams | None = None,
    options: BuildOptions | None = None,
    scenarios: list[str] | None = None,
    strategies: list[Strategy] | None = None,
    workers: int | None = None,
) -> list[ExperimentRow]:
    """Screening-accuracy scenarios at the instance's own composition."""
    scenarios = scenarios or list(SCREENING_SCENARIOS)
    variants = [apply_screening(instance, s) for s in scenarios]
    return run_experiment(
        variants,
        strategies
        or [Strategy.SINGLE_RESPONSE, Strategy.FULL_DISPATCH],
        sim_config,
        params,
        options,
        normalize=False,
        workers=workers,
    )


# ---- table output -------------------------------------------------------

def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(path: str, rows: list[ExperimentRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            record = asdict(row)
            writer.writerow([_cell_text(record[col]) for col in CSV_COLUMNS])


def rows_to_json(rows: list[ExperimentRow]) -> list[dict]:
    return [asdict(row) for row in rows]


def write_summary_json(path: str, rows: list[ExperimentRow], header: dict | None = None) -> None:
    doc = dict(header or {})
    doc["row_count"] = len(rows)
    doc["failed_rows"] = sum(
        1 for r in rows if r.solve_status in ("error", "infeasible", "missing")
    )
    doc["rows"] = rows_to_json(rows)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
