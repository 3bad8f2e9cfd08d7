"""Experiment-driver tests: row formatting, normalization, one live cell."""

import json

import pytest

from emsdivert.experiments import (
    CSV_COLUMNS,
    ExperimentRow,
    add_percent_of_potential,
    default_build_options,
    evaluate_cell,
    resolve_workers,
    rows_to_json,
    run_experiment,
    write_rows_csv,
    write_summary_json,
)
from emsdivert.model import Strategy
from emsdivert.sim import SimConfig
from emsdivert.solver import SolveParams

from conftest import tiny_instance


def full_row(**overrides):
    kwargs = dict(
        region="toy",
        screening="realistic",
        strategy="full",
        capable_units=2,
        total_units=4,
        solve_status="optimal",
        objective=0.125,
        bound=0.125,
        mean_diversion_rate=0.4,
        std_error=0.01,
        ci_low=0.38,
        ci_high=0.42,
        calls_mean=100.0,
        unserved_mean=1.5,
        fallback_mean=2.0,
        percent_of_potential=None,
        note="",
    )
    kwargs.update(overrides)
    return ExperimentRow(**kwargs)


def test_csv_column_names():
    assert CSV_COLUMNS == [
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


def test_default_build_options_keep_guarantees_on():
    options = default_build_options()
    assert options.availability is True
    assert options.coverage is True


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv("EMSDIVERT_WORKERS", raising=False)
    assert resolve_workers(None) == 1
    assert resolve_workers(3) == 3
    assert resolve_workers(0) == 1
    monkeypatch.setenv("EMSDIVERT_WORKERS", "4")
    assert resolve_workers(None) == 4
    monkeypatch.setenv("EMSDIVERT_WORKERS", "many")
    assert resolve_workers(None) == 1


def test_write_rows_csv_format(tmp_path):
    rows = [
        full_row(),
        ExperimentRow(
            region="toy",
            screening="realistic",
            strategy="single",
            capable_units=0,
            total_units=4,
            solve_status="error",
            note="build failed",
        ),
    ]
    out = tmp_path / "rows.csv"
    write_rows_csv(str(out), rows)
    text = out.read_text()
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("toy,realistic,full,2,4,optimal,0.125,0.125,0.4,")
    # None cells render empty, floats render by repr
    second = lines[2].split(",")
    assert second[5] == "error"
    assert second[6] == ""
    assert second[-1] == "build failed"
    assert text.endswith("\n")
    # byte determinism
    again = tmp_path / "rows2.csv"
    write_rows_csv(str(again), rows)
    assert again.read_bytes() == out.read_bytes()


def test_add_percent_of_potential():
    reference = full_row(capable_units=4)  # all-capable full dispatch
    half = full_row(capable_units=2, mean_diversion_rate=0.2)
    other_region = full_row(region="elsewhere", capable_units=1)
    missing = full_row(capable_units=1, mean_diversion_rate=None)
    rows = [reference, half, other_region, missing]
    add_percent_of_potential(rows)
    assert reference.percent_of_potential == pytest.approx(100.0)
    assert half.percent_of_potential == pytest.approx(50.0)
    # no all-capable reference in that group with capable < total
    assert other_region.percent_of_potential is None
    assert missing.percent_of_potential is None


def test_summary_json(tmp_path):
    rows = [
        full_row(),
        full_row(solve_status="error"),
        full_row(solve_status="infeasible"),
        full_row(solve_status="missing"),
    ]
    out = tmp_path / "summary.json"
    write_summary_json(str(out), rows, header={"experiment": "demo"})
    doc = json.loads(out.read_text())
    assert doc["experiment"] == "demo"
    assert doc["row_count"] == 4
    assert doc["failed_rows"] == 3
    assert doc["rows"] == rows_to_json(rows)
    assert doc["rows"][0]["mean_diversion_rate"] == 0.4
    assert out.read_text().endswith("\n")


def test_evaluate_cell_end_to_end():
    # rates low enough that one unit's availability guarantee holds
    inst = tiny_instance(rates=[(0.1, 0.15)])
    row = evaluate_cell(
        inst,
        Strategy.SINGLE_RESPONSE,
        default_build_options(),
        SolveParams(),
        SimConfig(horizon_days=1.0, replications=3, seed=1),
    )
    assert row.solve_status == "optimal"
    assert row.region == "toy"
    assert row.screening == "realistic"
    assert row.strategy == "single"
    assert row.capable_units == 1
    assert row.total_units == 2
    assert row.objective is not None
    assert row.mean_diversion_rate is not None
    assert row.calls_mean > 0


def test_evaluate_cell_reports_build_error():
    inst = tiny_instance(coverage_threshold=0.1)
    row = evaluate_cell(
        inst,
        Strategy.SINGLE_RESPONSE,
        default_build_options(),
        SolveParams(),
        SimConfig(horizon_days=1.0, replications=2, seed=1),
    )
    assert row.solve_status == "error"
    assert "coverage" in row.note


def test_run_experiment_order_is_stable_with_workers():
    insts = [
        tiny_instance(name="alpha", rates=[(0.1, 0.15)]),
        tiny_instance(name="beta", rates=[(0.12, 0.1)]),
    ]
    rows = run_experiment(
        insts,
        [Strategy.SINGLE_RESPONSE],
        sim_config=SimConfig(horizon_days=1.0, replications=2, seed=3),
        workers=2,
    )
    assert [r.region for r in rows] == ["alpha", "beta"]
    assert all(r.solve_status == "optimal" for r in rows)
