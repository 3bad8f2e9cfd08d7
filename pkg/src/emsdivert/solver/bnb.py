"""Branch and bound with best-first node selection and diving.

Open nodes are ordered by their parent LP bound (largest first) so the
top of the heap tracks the global upper bound; a node is pruned once its
bound cannot beat the incumbent by more than the absolute gap target.
Each popped node starts a depth-first dive: solve the LP, branch on the
fractional binary with the lowest variable id, push the far child and
follow the near one, repeating until the dive ends integral, pruned, or
infeasible.  Lowest-id branching fixes allocation variables before
dispatch and action variables, which collapses the rest of the model
quickly, and diving finds integral incumbents early so the heap prunes
hard.  All tie-breaks are deterministic.

A dive reuses a single simplex workspace: a child differs from its
parent by one bound, which leaves the tableau valid, so re-solving costs
only the dual pivots that bound change triggers instead of a fresh
factorization.  The tableau is rebuilt on a fixed pivot cadence to shed
numerical drift.

When an LP relaxation comes out integral, the binaries are pinned at
their rounded values and the LP re-solved in place, so the stored
incumbent is an exact vertex (continuous variables included) rather than
a rounded point.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from ..model import MipModel
from .simplex import reoptimize, solve_workspace, standard_form

INT_TOL = 1e-6
#: simplex pivots between tableau rebuilds while diving
REFRESH_EVERY = 400


@dataclass
class BnbResult:
    status: str  # "optimal" | "gap_reached" | "limit" | "infeasible"
    objective: float
    assignment: np.ndarray | None
    bound: float
    nodes: int
    wall_seconds: float
    iterations: int


@dataclass(order=True)
class _Node:
    sort_key: tuple
    bound: float = field(compare=False)
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    basis: np.ndarray | None = field(compare=False)
    vstat: np.ndarray | None = field(compare=False)


def branch_and_bound(
    model: MipModel,
    gap_target: float = 0.01,
    time_limit: float | None = None,
    node_limit: int | None = None,
    incumbent: np.ndarray | None = None,
) -> BnbResult:
    """Maximize the model to within the absolute gap target.

    incumbent, when given, must be feasible (verified here); it seeds the
    search so pruning starts immediately.
    """
    t0 = time.perf_counter()
    lp = standard_form(model)
    binary_ids = np.asarray(model.binary_ids(), dtype=int)
    n_struct = model.n_variables

    best_obj = -np.inf
    best_x: np.ndarray | None = None
    if incumbent is not None:
        inc = np.asarray(incumbent, dtype=float)
        problems = model.check_assignment(inc)
        if problems:
            raise ValueError(
                "warm-start assignment is infeasible: " + problems[0]
            )
        best_obj = model.objective_value(inc)
        best_x = inc.copy()

    nodes = 0
    iterations = 0
    pruned_bound = -np.inf  # largest bound dropped under the gap rule
    abandoned = -np.inf  # bound over dives cut off by a limit
    heap: list[_Node] = []
    counter = 0
    hit_limit = False

    def out_of_budget() -> bool:
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return True
        if node_limit is not None and nodes >= node_limit:
            return True
        return False

    def push(bound: float, lower, upper, basis, vstat) -> None:
        nonlocal counter
        counter += 1
        heapq.heappush(
            heap, _Node((-bound, counter), bound, lower, upper, basis, vstat)
        )

    def record_incumbent(ws) -> None:
        """Pin binaries at rounded values and keep the exact vertex."""
        nonlocal best_obj, best_x
        rounded = np.round(ws.x[binary_ids])
        ws.lower[binary_ids] = rounded
        ws.upper[binary_ids] = rounded
        if reoptimize(ws) != "optimal":
            return
        # recompute exactly before trusting the point
        ws.refactorize()
        if reoptimize(ws) != "optimal":  # pragma: no cover - defensive
            return
        obj = float(lp.c @ ws.x)
        if obj > best_obj + 1e-12:
            cand = ws.x[:n_struct].copy()
            cand[binary_ids] = rounded
            best_obj = obj
            best_x = cand

    def dive(ws, inherited: float) -> None:
        """Depth-first descent reusing one workspace; siblings go on the heap."""
        nonlocal nodes, iterations, pruned_bound, abandoned, hit_limit
        bound = inherited
        last_factor = ws.iterations
        while True:
            bound = min(bound, float(lp.c @ ws.x))
            if bound <= best_obj + gap_target:
                pruned_bound = max(pruned_bound, bound)
                break
            vals = ws.x[binary_ids]
            frac = np.abs(vals - np.round(vals))
            fractional = binary_ids[frac > INT_TOL]
            if fractional.size == 0:
                record_incumbent(ws)
                break
            var = int(fractional[0])  # lowest variable id
            dive_up = ws.x[var] >= 0.5
            lo = ws.lower.copy()
            up = ws.upper.copy()
            if dive_up:
                up[var] = 0.0  # far child
                ws.lower[var] = 1.0
            else:
                lo[var] = 1.0
                ws.upper[var] = 0.0
            push(bound, lo, up, ws.basis.copy(), ws.vstat.copy())
            if out_of_budget():
                hit_limit = True
                abandoned = max(abandoned, bound)
                break
            if ws.iterations - last_factor >= REFRESH_EVERY:
                ws.refactorize()
                last_factor = ws.iterations
            status = reoptimize(ws)
            nodes += 1
            if status == "infeasible":
                break
            if status != "optimal":
                hit_limit = True
                abandoned = max(abandoned, bound)
                break
        iterations += ws.iterations

    status, ws = solve_workspace(lp, lp.lower.copy(), lp.upper.copy())
    nodes = 1
    if status == "infeasible":
        iterations += ws.iterations
        wall = time.perf_counter() - t0
        if best_x is not None:
            return BnbResult("optimal", best_obj, best_x, best_obj, nodes, wall, iterations)
        return BnbResult("infeasible", -np.inf, None, -np.inf, nodes, wall, iterations)
    if status in ("limit", "unbounded"):
        iterations += ws.iterations
        return BnbResult(
            "limit", best_obj, best_x, np.inf, nodes,
            time.perf_counter() - t0, iterations,
        )
    dive(ws, float(lp.c @ ws.x))

    while heap:
        if out_of_budget():
            hit_limit = True
            break
        node = heapq.heappop(heap)
        if node.bound <= best_obj + gap_target:
            pruned_bound = max(pruned_bound, node.bound)
            continue
        status, ws = solve_workspace(
            lp, node.lower, node.upper, node.basis, node.vstat
        )
        nodes += 1
        if status == "infeasible":
            iterations += ws.iterations
            continue
        if status in ("limit", "unbounded"):
            iterations += ws.iterations
            hit_limit = True
            abandoned = max(abandoned, node.bound)
            break
        dive(ws, node.bound)

    wall = time.perf_counter() - t0
    open_bound = max((n.bound for n in heap), default=-np.inf)
    open_bound = max(open_bound, abandoned)
    proven = max(best_obj, pruned_bound, open_bound if hit_limit else -np.inf)

    if best_x is None:
        status = "limit" if hit_limit else "infeasible"
        return BnbResult(status, -np.inf, None, proven, nodes, wall, iterations)
    gap = proven - best_obj
    if hit_limit and open_bound > best_obj + gap_target:
        status = "limit"
    elif gap <= 1e-9:
        status = "optimal"
    else:
        status = "gap_reached"
    return BnbResult(status, best_obj, best_x, proven, nodes, wall, iterations)
