"""Command-line interface.

Subcommands: generate, plan, simulate, experiment, export-lp, queueing.
Every option can also come from a YAML config file (--config); explicit
command-line flags win over config values, which win over defaults, and
the fully resolved values are echoed into the run manifest written next
to each output artifact.

Exit codes: 0 success, 1 computational failure (infeasible model, solve
limits, all experiment cells failed), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace as dc_replace

import numpy as np
import yaml

from . import __version__
from .experiments import (
    dispatch_compare,
    fleet_sweep,
    resolve_workers,
    screening_compare,
    write_rows_csv,
    write_summary_json,
)
from .lp_io import write_lp_file
from .manifest import RunManifest, now_iso, write_manifest
from .model import BuildError, BuildOptions, Strategy, build_extensive_form
from .plans import extract_solution, load_plan, save_plan
from .queueing import capacity_schedule, erlang_b
from .scenario import ARCHETYPES, generate_region
from .scenario_io import ScenarioFormatError, load_scenario, save_scenario
from .sim import SimConfig, default_profile, flat_profile, simulate
from .solver import (
    Backend,
    SolveParams,
    SolveStatus,
    SolverError,
    parse_external_solution,
    solve,
    solve_progressive,
)

STRATEGY_NAMES = {
    "full-dispatch": Strategy.FULL_DISPATCH,
    "multiple-response": Strategy.MULTIPLE_RESPONSE,
    "single-response": Strategy.SINGLE_RESPONSE,
}

PROFILE_NAMES = {"default": default_profile, "flat": flat_profile}


class CliError(Exception):
    """Usage or configuration problem (exit code 2)."""


class ComputeError(Exception):
    """Computational failure (exit code 1)."""


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise CliError(f"malformed config file: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise CliError("config file must hold a mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


class Resolver:
    """Option resolution with precedence: CLI flag > config > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config_path = getattr(args, "config", None)
        self.config = _load_config(self.config_path)
        self.used: set[str] = set()
        self.resolved: dict = {}

    def get(self, name: str, default=None, cast=None, required: bool = False):
        key = name.replace("-", "_")
        self.used.add(key)
        value = getattr(self.args, key, None)
        if value is None and key in self.config:
            value = self.config[key]
        if value is None:
            value = default
        if value is None and required:
            raise CliError(f"missing required option --{name}")
        if cast is not None and value is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError, KeyError) as exc:
                raise CliError(f"bad value for {name}: {value!r}") from exc
        self.resolved[key] = value
        return value

    def finish(self) -> None:
        unknown = sorted(set(self.config) - self.used)
        if unknown:
            raise CliError(
                "unknown config keys: " + ", ".join(unknown)
            )


def _cast_switch(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).lower()
    if text in ("on", "true", "yes", "1"):
        return True
    if text in ("off", "false", "no", "0"):
        return False
    raise ValueError(value)


def _cast_strategy(value) -> Strategy:
    if isinstance(value, Strategy):
        return value
    return STRATEGY_NAMES[str(value).replace("_", "-")]


def _cast_backend(value) -> Backend:
    if isinstance(value, Backend):
        return value
    return Backend(str(value).replace("_", "-"))


def _cast_compositions(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    parts = [p.strip() for p in str(value).split(",") if p.strip()]
    return [int(p) for p in parts]


def _manifest(
    command: str, resolver: Resolver, seed=None, inputs: list[str] = ()
) -> RunManifest:
    manifest = RunManifest(
        command=command,
        version=__version__,
        seed=seed,
        config_path=resolver.config_path,
        resolved={
            k: (v.value if hasattr(v, "value") else v)
            for k, v in sorted(resolver.resolved.items())
        },
        started_at=now_iso(),
    )
    for path in inputs:
        manifest.add_input(path)
    return manifest


def _load_instance(path: str):
    try:
        return load_scenario(path)
    except OSError as exc:
        raise CliError(f"cannot read instance: {exc}") from exc
    except ScenarioFormatError as exc:
        raise CliError(str(exc)) from exc


def _solve_params(res: Resolver) -> SolveParams:
    return SolveParams(
        absolute_gap_target=res.get("gap", 0.01, float),
        time_limit=res.get("time-limit", None, float),
        node_limit=res.get("node-limit", None, int),
        backend=res.get("backend", Backend.AUTO, _cast_backend),
        solution_file=res.get("solution-file", None, str),
    )


def _build_options(res: Resolver, default_coverage: bool = False) -> BuildOptions:
    return BuildOptions(
        strategy=res.get("strategy", Strategy.FULL_DISPATCH, _cast_strategy),
        availability=res.get("availability", True, _cast_switch),
        coverage=res.get("coverage", default_coverage, _cast_switch),
        coverage_threshold=res.get("coverage-threshold", None, float),
    )


def _sim_config(res: Resolver) -> SimConfig:
    profile_name = res.get("profile", "default", str)
    if profile_name not in PROFILE_NAMES:
        raise CliError(f"unknown profile {profile_name!r}")
    return SimConfig(
        horizon_days=res.get("horizon-days", 7.0, float),
        replications=res.get("replications", 100, int),
        seed=res.get("sim-seed", 0, int),
        rate_multipliers=PROFILE_NAMES[profile_name](),
        assessment_minutes=res.get("assessment-minutes", 5.0, float),
        partial_substitution=res.get("partial-substitution", False, _cast_switch),
    )


def model_stats(model) -> dict:
    by_prefix: dict[str, int] = {}
    for var in model.variables:
        prefix = var.name.split(":", 1)[0]
        by_prefix[prefix] = by_prefix.get(prefix, 0) + 1
    return {
        "variable_count": model.n_variables,
        "constraint_count": model.n_constraints,
        "binary_count": len(model.binary_ids()),
        "variables_by_prefix": dict(sorted(by_prefix.items())),
        "constraint_families": sorted(model.present_families()),
    }


# ---- subcommands --------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    archetype = res.get("archetype", required=True, cast=str)
    seed = res.get("seed", 0, int)
    out = res.get("out", required=True, cast=str)
    res.finish()
    if archetype not in ARCHETYPES:
        raise CliError(
            f"unknown archetype {archetype!r}; choices: "
            + ", ".join(sorted(ARCHETYPES))
        )
    manifest = _manifest("generate", res, seed=seed)
    instance = generate_region(archetype, seed)
    save_scenario(out, instance)
    manifest.finished_at = now_iso()
    write_manifest(out, manifest)
    print(
        f"wrote {out}: {instance.n_stations} stations, "
        f"{instance.n_nodes} nodes, {sum(u.fleet_size for u in instance.unit_types)} units"
    )
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    res = Resolver(args)
    instance_path = res.get("instance", required=True, cast=str)
    out = res.get("out", required=True, cast=str)
    options = _build_options(res)
    params = _solve_params(res)
    progressive = res.get("progressive", True, _cast_switch)
    export_lp = res.get("export-lp", None, str)
    res.finish()

    instance = _load_instance(instance_path)
    manifest = _manifest("plan", res, inputs=[instance_path])
    try:
        model, index = build_extensive_form(instance, options)
    except BuildError as exc:
        raise ComputeError(
            "model construction failed: " + "; ".join(exc.diagnostics)
        ) from exc
    if export_lp:
        write_lp_file(model, index, export_lp)

    try:
        if params.backend is Backend.EXTERNAL_FILE:
            if params.solution_file is None:
                raise CliError("external-file backend needs --solution-file")
            with open(params.solution_file, "r", encoding="utf-8") as fh:
                result = parse_external_solution(model, index, fh.read())
        elif options.strategy is Strategy.FULL_DISPATCH and progressive:
            result = solve_progressive(instance, options, params)
        else:
            result = solve(model, params)
    except SolverError as exc:
        raise ComputeError(str(exc)) from exc

    stats = model_stats(model)
    result_doc = {
        "status": result.status.value,
        "objective": result.objective,
        "bound": result.bound,
        "gap": result.gap,
        "nodes": result.nodes,
        "backend": result.backend,
        "progressive_stages": list(result.progressive_stages),
        "strategy": options.strategy.value,
    }
    if result.assignment is None:
        doc = {"result": result_doc, "model_stats": stats}
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        manifest.finished_at = now_iso()
        write_manifest(out, manifest)
        print(f"solve failed: {result.status.value}")
        return 1

    plan, policy = extract_solution(instance, index, result.assignment)
    save_plan(
        out, plan, policy, header={"result": result_doc, "model_stats": stats}
    )
    manifest.finished_at = now_iso()
    write_manifest(out, manifest)
    print(
        f"{result.status.value}: objective {result.objective:.6f}, "
        f"bound {result.bound:.6f}, {result.nodes} nodes, wrote {out}"
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    instance_path = res.get("instance", required=True, cast=str)
    plan_path = res.get("plan", required=True, cast=str)
    out = res.get("out", required=True, cast=str)
    csv_out = res.get("csv", None, str)
    config = _sim_config(res)
    res.finish()

    instance = _load_instance(instance_path)
    try:
        plan, policy, _header = load_plan(plan_path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read plan: {exc}") from exc
    manifest = _manifest(
        "simulate", res, seed=config.seed, inputs=[instance_path, plan_path]
    )
    try:
        report = simulate(instance, plan, policy, config)
    except ValueError as exc:
        raise CliError(f"plan inconsistent with instance: {exc}") from exc

    doc = report.to_dict()
    doc["instance"] = instance.name
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if csv_out:
        with open(csv_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "replication",
                    "calls",
                    "diversions",
                    "ed_transports",
                    "fallbacks",
                    "unserved",
                    "mean_utilization",
                ]
            )
            for idx, rep in enumerate(report.replications):
                mean_util = (
                    float(np.mean(list(rep.utilization.values())))
                    if rep.utilization
                    else 0.0
                )
                writer.writerow(
                    [
                        idx,
                        rep.calls,
                        rep.diversions,
                        rep.ed_transports,
                        rep.fallbacks,
                        rep.unserved,
                        repr(mean_util),
                    ]
                )
    manifest.finished_at = now_iso()
    write_manifest(out, manifest)
    lo, hi = report.ci95
    print(
        f"mean diversion rate {report.mean_diversion_rate:.4f} "
        f"(95% CI {lo:.4f}..{hi:.4f}) over {len(report.replications)} replications"
    )
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    res = Resolver(args)
    name = res.get("name", required=True, cast=str)
    region = res.get("region", required=True, cast=str)
    seed = res.get("seed", 0, int)
    out = res.get("out", required=True, cast=str)
    compositions = res.get("compositions", None, _cast_compositions)
    workers = res.get("workers", None, int)
    params = _solve_params(res)
    options = _build_options(res, default_coverage=True)
    config = _sim_config(res)
    res.finish()

    if name not in ("fleet-sweep", "dispatch-compare", "screening"):
        raise CliError(f"unknown experiment {name!r}")

    inputs = []
    if os.path.exists(region):
        instance = _load_instance(region)
        inputs.append(region)
    elif region in ARCHETYPES:
        instance = generate_region(region, seed)
    else:
        raise CliError(
            f"region {region!r} is neither a scenario file nor an archetype"
        )
    manifest = _manifest("experiment", res, seed=seed, inputs=inputs)

    total = sum(u.fleet_size for u in instance.unit_types)
    if compositions is None:
        points = np.linspace(0, total, 6)
        compositions = sorted({int(round(v)) for v in points})

    n_workers = resolve_workers(workers)
    if name == "fleet-sweep":
        rows = fleet_sweep(
            instance, compositions, config, params, options, workers=n_workers
        )
    elif name == "dispatch-compare":
        rows = dispatch_compare(
            instance, compositions, config, params, options, workers=n_workers
        )
    else:
        rows = screening_compare(
            instance, config, params, options, workers=n_workers
        )

    write_rows_csv(out, rows)
    base, _ext = os.path.splitext(out)
    summary_path = base + ".summary.json"
    write_summary_json(
        summary_path,
        rows,
        header={"experiment": name, "region": instance.name},
    )
    manifest.finished_at = now_iso()
    write_manifest(out, manifest)

    failed = sum(
        1 for r in rows if r.solve_status in ("error", "infeasible", "missing")
    )
    print(f"wrote {out} ({len(rows)} rows, {failed} failed)")
    if failed == len(rows):
        return 1
    return 0


def cmd_export_lp(args: argparse.Namespace) -> int:
    res = Resolver(args)
    instance_path = res.get("instance", required=True, cast=str)
    out = res.get("out", required=True, cast=str)
    options = _build_options(res)
    res.finish()

    instance = _load_instance(instance_path)
    manifest = _manifest("export-lp", res, inputs=[instance_path])
    try:
        model, index = build_extensive_form(instance, options)
    except BuildError as exc:
        raise ComputeError(
            "model construction failed: " + "; ".join(exc.diagnostics)
        ) from exc
    write_lp_file(model, index, out)
    manifest.finished_at = now_iso()
    write_manifest(out, manifest)
    print(
        f"wrote {out}: {model.n_variables} variables, "
        f"{model.n_constraints} constraints"
    )
    return 0


def cmd_queueing(args: argparse.Namespace) -> int:
    res = Resolver(args)
    alpha = res.get("alpha", 0.05, float)
    max_units = res.get("max-units", 10, int)
    out = res.get("out", None, str)
    res.finish()
    if not 0 < alpha < 1:
        raise CliError("alpha must lie in (0, 1)")
    if max_units < 1:
        raise CliError("max-units must be at least 1")

    schedule = capacity_schedule(alpha, max_units)
    rows = []
    for d in range(1, max_units + 1):
        rho = schedule.capacity(d)
        marginal = schedule.marginal[d - 1]
        rows.append((d, rho, marginal, erlang_b(d, rho)))

    header = ["units", "max_load_erlangs", "marginal_erlangs", "blocking_at_max"]
    if out:
        manifest = _manifest("queueing", res)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for d, rho, marginal, blocking in rows:
                writer.writerow([d, repr(rho), repr(marginal), repr(blocking)])
        manifest.finished_at = now_iso()
        write_manifest(out, manifest)
        print(f"wrote {out}")
    else:
        print("  ".join(header))
        for d, rho, marginal, blocking in rows:
            print(f"{d}  {rho:.6f}  {marginal:.6f}  {blocking:.6f}")
    return 0


# ---- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emsdivert",
        description=(
            "Plan and evaluate patient-centered ambulance allocations: "
            "generate synthetic regions, solve allocation models, "
            "simulate plans, and run comparison experiments."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file with option defaults")
        p.set_defaults(func=func)
        return p

    p = add("generate", cmd_generate, "write a synthetic region scenario file")
    p.add_argument("--archetype", help="region family: " + ", ".join(sorted(ARCHETYPES)))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="scenario file to write")

    p = add("plan", cmd_plan, "solve an allocation model and write the plan")
    p.add_argument("--instance", help="scenario file")
    p.add_argument("--strategy", choices=sorted(STRATEGY_NAMES))
    p.add_argument("--availability", choices=["on", "off"])
    p.add_argument("--coverage", choices=["on", "off"])
    p.add_argument("--coverage-threshold", type=float)
    p.add_argument("--gap", type=float, help="absolute optimality gap target")
    p.add_argument("--time-limit", type=float, help="seconds")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--backend", choices=[b.value for b in Backend])
    p.add_argument("--solution-file", help="solution text for external-file backend")
    p.add_argument("--progressive", choices=["on", "off"])
    p.add_argument("--export-lp", help="also write the model in LP format")
    p.add_argument("--out", help="plan JSON to write")

    p = add("simulate", cmd_simulate, "simulate a solved plan")
    p.add_argument("--instance", help="scenario file")
    p.add_argument("--plan", help="plan JSON from the plan command")
    p.add_argument("--replications", type=int)
    p.add_argument("--horizon-days", type=float)
    p.add_argument("--sim-seed", type=int)
    p.add_argument("--profile", choices=sorted(PROFILE_NAMES))
    p.add_argument("--assessment-minutes", type=float)
    p.add_argument("--partial-substitution", choices=["on", "off"])
    p.add_argument("--out", help="report JSON to write")
    p.add_argument("--csv", help="optional per-replication CSV")

    p = add("experiment", cmd_experiment, "run a full sweep experiment")
    p.add_argument(
        "--name", choices=["fleet-sweep", "dispatch-compare", "screening"]
    )
    p.add_argument("--region", help="archetype name or scenario file path")
    p.add_argument("--seed", type=int, help="region generation seed")
    p.add_argument("--compositions", help="comma-separated capable-unit counts")
    p.add_argument("--workers", type=int)
    p.add_argument("--availability", choices=["on", "off"])
    p.add_argument("--coverage", choices=["on", "off"])
    p.add_argument("--coverage-threshold", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--backend", choices=[b.value for b in Backend])
    p.add_argument("--solution-file", help=argparse.SUPPRESS)
    p.add_argument("--strategy", help=argparse.SUPPRESS)
    p.add_argument("--replications", type=int)
    p.add_argument("--horizon-days", type=float)
    p.add_argument("--sim-seed", type=int)
    p.add_argument("--profile", choices=sorted(PROFILE_NAMES))
    p.add_argument("--assessment-minutes", type=float)
    p.add_argument("--partial-substitution", choices=["on", "off"])
    p.add_argument("--out", help="experiment CSV to write")

    p = add("export-lp", cmd_export_lp, "write a model in LP text format")
    p.add_argument("--instance", help="scenario file")
    p.add_argument("--strategy", choices=sorted(STRATEGY_NAMES))
    p.add_argument("--availability", choices=["on", "off"])
    p.add_argument("--coverage", choices=["on", "off"])
    p.add_argument("--coverage-threshold", type=float)
    p.add_argument("--out", help="LP file to write")

    p = add("queueing", cmd_queueing, "print the unit-capacity schedule")
    p.add_argument("--alpha", type=float)
    p.add_argument("--max-units", type=int)
    p.add_argument("--out", help="optional CSV output path")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
