"""Large-scale backend: scipy's HiGHS MILP interface.

Used for models beyond the comfortable reach of the dense internal
simplex.  The wrapper translates the maximization model, requests an
essentially exact relative gap, and maps HiGHS statuses onto the solver's
own result vocabulary.  HiGHS has no warm-start surface through scipy, so
progressive solves fall back to keeping the better of the staged results.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from ..model import BINARY, MipModel


@dataclass
class HighsOutcome:
    status: str  # "optimal" | "limit" | "infeasible"
    objective: float
    assignment: np.ndarray | None
    bound: float
    nodes: int


def solve_highs(
    model: MipModel,
    time_limit: float | None = None,
    node_limit: int | None = None,
    rel_gap: float = 1e-9,
) -> HighsOutcome:
    n = model.n_variables
    c = np.zeros(n)
    for vid, coef in model.objective:
        c[vid] = -coef  # milp minimizes

    integrality = np.zeros(n, dtype=np.uint8)
    lower = np.empty(n)
    upper = np.empty(n)
    for i, v in enumerate(model.variables):
        lower[i] = v.lower
        upper[i] = v.upper
        if v.kind == BINARY:
            integrality[i] = 1

    rows = []
    cols = []
    vals = []
    lb = np.empty(model.n_constraints)
    ub = np.empty(model.n_constraints)
    for r, con in enumerate(model.constraints):
        for vid, coef in con.terms:
            rows.append(r)
            cols.append(vid)
            vals.append(coef)
        if con.sense == "<=":
            lb[r], ub[r] = -np.inf, con.rhs
        elif con.sense == ">=":
            lb[r], ub[r] = con.rhs, np.inf
        else:
            lb[r], ub[r] = con.rhs, con.rhs
    A = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(model.n_constraints, n)
    )

    options: dict = {"mip_rel_gap": rel_gap, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    if node_limit is not None:
        options["node_limit"] = int(node_limit)

    res = milp(
        c=c,
        constraints=LinearConstraint(A, lb, ub),
        integrality=integrality,
        bounds=Bounds(lower, upper),
        options=options,
    )

    if res.status == 2:
        return HighsOutcome("infeasible", -np.inf, None, -np.inf, 0)
    if res.x is None:
        return HighsOutcome("limit", -np.inf, None, np.inf, 0)

    x = np.asarray(res.x, dtype=float)
    x[integrality == 1] = np.round(x[integrality == 1])
    objective = model.objective_value(x)
    dual_bound = getattr(res, "mip_dual_bound", None)
    bound = -float(dual_bound) if dual_bound is not None else objective
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    status = "optimal" if res.status == 0 else "limit"
    return HighsOutcome(status, objective, x, bound, nodes)
