"""Patient-centered ambulance allocation: planning models, solvers,
synthetic regions, and discrete-event evaluation.

The package answers two linked questions for an EMS system whose
diversion-capable units can treat patients in place or transport them to
alternative destinations: where should units of each type be stationed,
and which units should respond to each kind of call.  The planning model
is a two-stage program (allocate and dispatch before the on-scene
condition is known, act and optionally send a secondary unit after),
solved either by the built-in branch-and-bound or an external MILP
backend, and evaluated by simulation.
"""
from .actions import ServiceTimeConstants, build_catalog, nearest_facility
from .domain import (
    Action,
    ActionCatalog,
    ActionMenu,
    ActionSpec,
    Capability,
    ConditionModel,
    DemandNode,
    DIVERTING_ACTIONS,
    ScenarioInstance,
    ServiceLeg,
    Station,
    TravelMatrix,
    UnitType,
    rural_condition_model,
    urban_condition_model,
    validate,
)
from .geometry import TravelModel, travel_matrix, travel_time
from .lp_io import (
    LpParseError,
    read_lp_file,
    read_solution_text,
    write_lp_file,
    write_solution_text,
)
from .model import (
    BuildError,
    BuildOptions,
    MipModel,
    Strategy,
    VariableIndex,
    build_extensive_form,
    build_fleet_sizing_model,
)
from .plans import (
    AllocationPlan,
    ExtractError,
    RecoursePolicy,
    extract_solution,
    load_plan,
    save_plan,
)
from .queueing import (
    CapacitySchedule,
    capacity_schedule,
    erlang_b,
    max_traffic_intensity,
)
from .scenario import (
    ARCHETYPES,
    RegionArchetype,
    apply_screening,
    derive_service_times,
    fleet_composition_sweep,
    generate_region,
    screening_scenarios,
)
from .scenario_io import ScenarioFormatError, load_scenario, save_scenario
from .sim import (
    SimConfig,
    SimulationReport,
    default_profile,
    flat_profile,
    simulate,
)
from .solver import (
    Backend,
    SolveParams,
    SolveResult,
    SolveStatus,
    SolverError,
    parse_external_solution,
    solve,
    solve_progressive,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionCatalog",
    "ActionMenu",
    "ActionSpec",
    "AllocationPlan",
    "ARCHETYPES",
    "Backend",
    "BuildError",
    "BuildOptions",
    "Capability",
    "CapacitySchedule",
    "ConditionModel",
    "DemandNode",
    "DIVERTING_ACTIONS",
    "ExtractError",
    "LpParseError",
    "MipModel",
    "RecoursePolicy",
    "RegionArchetype",
    "ScenarioFormatError",
    "ScenarioInstance",
    "ServiceLeg",
    "ServiceTimeConstants",
    "SimConfig",
    "SimulationReport",
    "SolveParams",
    "SolveResult",
    "SolveStatus",
    "SolverError",
    "Station",
    "Strategy",
    "TravelMatrix",
    "TravelModel",
    "UnitType",
    "VariableIndex",
    "apply_screening",
    "build_catalog",
    "build_extensive_form",
    "build_fleet_sizing_model",
    "capacity_schedule",
    "default_profile",
    "derive_service_times",
    "erlang_b",
    "extract_solution",
    "flat_profile",
    "fleet_composition_sweep",
    "generate_region",
    "load_plan",
    "load_scenario",
    "max_traffic_intensity",
    "nearest_facility",
    "parse_external_solution",
    "read_lp_file",
    "read_solution_text",
    "rural_condition_model",
    "save_plan",
    "save_scenario",
    "screening_scenarios",
    "simulate",
    "solve",
    "solve_progressive",
    "travel_matrix",
    "travel_time",
    "urban_condition_model",
    "validate",
    "write_lp_file",
    "write_solution_text",
]
