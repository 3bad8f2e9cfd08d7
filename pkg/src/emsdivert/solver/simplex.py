"""Dense bounded-variable simplex for the internal solver.

Models are brought to equality standard form with one slack per
inequality and a permanent artificial column per row.  Artificials are
fixed to zero except during the cold-start phase 1, so a basis (which may
legitimately retain a degenerate artificial for a redundant row) stays
valid across re-solves of the same model with tightened bounds, which is
what the branch-and-bound layer relies on.

Pricing is Dantzig (steepest reduced cost) with an automatic switch to
Bland's lowest-index rule after a run of degenerate steps, which
guarantees termination; all tie-breaks are by lowest index, so solves are
deterministic.  Warm re-solves run the dual simplex from the supplied
basis and finish with a primal cleanup pass.

solve_workspace hands the live workspace back to the caller, who may
then edit the bound arrays in place and reoptimize() repeatedly; the
tableau depends only on the basis, so bound changes never invalidate it.
The branch-and-bound dives are built on that: a child node costs only
the dual pivots its single bound change triggers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import BINARY, MipModel

#: feasibility tolerance on variable bounds and row activity
FEAS_TOL = 1e-7
#: reduced-cost tolerance for optimality
COST_TOL = 1e-9
#: smallest pivot magnitude accepted
PIVOT_TOL = 1e-9
#: consecutive degenerate steps before switching to Bland's rule
DEGEN_SWITCH = 40

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2


@dataclass
class StandardLp:
    """maximize c.x  s.t.  A x = b,  lower <= x <= upper.

    Columns: structural variables, then inequality slacks, then one
    artificial per row (bounds [0, 0] outside phase 1).
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_structural: int
    n_real: int  # structural + slacks (everything except artificials)


@dataclass
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded" | "limit"
    x: np.ndarray | None
    objective: float
    basis: np.ndarray | None
    vstat: np.ndarray | None
    iterations: int


def standard_form(model: MipModel) -> StandardLp:
    n = model.n_variables
    m = model.n_constraints
    n_slack = sum(1 for c in model.constraints if c.sense != "=")
    n_total = n + n_slack + m

    A = np.zeros((m, n_total))
    b = np.empty(m)
    lower = np.zeros(n_total)
    upper = np.zeros(n_total)
    c = np.zeros(n_total)

    for i, v in enumerate(model.variables):
        lower[i] = v.lower
        upper[i] = v.upper
    for vid, coef in model.objective:
        c[vid] = coef

    slack_at = n
    for row, con in enumerate(model.constraints):
        for vid, coef in con.terms:
            A[row, vid] += coef
        b[row] = con.rhs
        if con.sense != "=":
            A[row, slack_at] = 1.0 if con.sense == "<=" else -1.0
            lower[slack_at] = 0.0
            upper[slack_at] = np.inf
            slack_at += 1
        # artificial column for this row (fixed to zero by default)
        A[row, n + n_slack + row] = 1.0

    return StandardLp(
        A=A,
        b=b,
        c=c,
        lower=lower,
        upper=upper,
        n_structural=n,
        n_real=n + n_slack,
    )


class _Workspace:
    """Mutable simplex state over one StandardLp with given bounds."""

    def __init__(
        self,
        lp: StandardLp,
        lower: np.ndarray,
        upper: np.ndarray,
        basis: np.ndarray,
        vstat: np.ndarray,
        x: np.ndarray,
    ) -> None:
        self.lp = lp
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.vstat = vstat
        self.x = x
        self.T = self._factorize()
        self.iterations = 0

    def _factorize(self) -> np.ndarray:
        B = self.lp.A[:, self.basis]
        return np.linalg.solve(B, self.lp.A)

    def refresh_basic_values(self) -> None:
        """Recompute basic variable values from the nonbasic ones."""
        mask = np.ones(self.lp.A.shape[1], dtype=bool)
        mask[self.basis] = False
        rhs = self.lp.b - self.lp.A[:, mask] @ self.x[mask]
        B = self.lp.A[:, self.basis]
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def refactorize(self) -> None:
        """Rebuild the tableau from scratch to shed accumulated drift."""
        self.T = self._factorize()
        self.refresh_basic_values()

    def snap_to_bounds(self) -> None:
        """Move nonbasic variables onto their (possibly edited) bounds.

        Fixing a basic variable leaves every nonbasic value valid, so the
        common branch-and-bound edit skips the refresh entirely; only
        edits that strand a nonbasic variable off its bound pay for the
        basic-value recomputation.
        """
        stranded_lo = (self.vstat == AT_LOWER) & (self.x != self.lower)
        stranded_hi = (self.vstat == AT_UPPER) & (self.x != self.upper)
        if not (stranded_lo.any() or stranded_hi.any()):
            return
        self.x[stranded_lo] = self.lower[stranded_lo]
        self.x[stranded_hi] = self.upper[stranded_hi]
        self.refresh_basic_values()

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        d = c - c[self.basis] @ self.T
        d[self.basis] = 0.0
        return d

    def _pivot(self, r: int, q: int, d: np.ndarray) -> None:
        T = self.T
        dq = d[q]
        piv = T[r, q]
        T[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        d -= dq * T[r]
        d[q] = 0.0

    # ---- primal iterations -------------------------------------------
    def primal(
        self, c: np.ndarray, d: np.ndarray, iter_limit: int
    ) -> str:
        lower, upper, x, vstat, basis = (
            self.lower,
            self.upper,
            self.x,
            self.vstat,
            self.basis,
        )
        free_range = upper - lower
        degen_run = 0
        while True:
            if self.iterations >= iter_limit:
                return "limit"
            self.iterations += 1

            nonfixed = free_range > 0
            improving = (
                ((vstat == AT_LOWER) & (d > COST_TOL))
                | ((vstat == AT_UPPER) & (d < -COST_TOL))
            ) & nonfixed
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return "optimal"
            if degen_run >= DEGEN_SWITCH:
                q = int(cand[0])  # Bland: lowest index
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if vstat[q] == AT_LOWER else -1.0

            w = direction * self.T[:, q]
            bvals = x[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim_lo = np.where(w > PIVOT_TOL, (bvals - lower[basis]) / w, np.inf)
                lim_hi = np.where(
                    w < -PIVOT_TOL, (bvals - upper[basis]) / w, np.inf
                )
            lims = np.minimum(lim_lo, lim_hi)
            t_rows = float(lims.min(initial=np.inf))
            t_flip = free_range[q]
            if not np.isfinite(min(t_rows, t_flip)):
                return "unbounded"

            if t_flip < t_rows - 1e-12:
                # entering variable runs to its other bound; no pivot
                degen_run = degen_run + 1 if t_flip < 1e-10 else 0
                x[basis] = bvals - t_flip * w
                x[q] += direction * t_flip
                vstat[q] = AT_UPPER if vstat[q] == AT_LOWER else AT_LOWER
                continue

            t_best = max(t_rows, 0.0)
            rows_at_min = np.flatnonzero(lims <= t_rows + 1e-12)
            if degen_run >= DEGEN_SWITCH:
                leave_row = int(rows_at_min[np.argmin(basis[rows_at_min])])
            else:
                leave_row = int(rows_at_min[np.argmax(np.abs(w[rows_at_min]))])
            leave_to = AT_LOWER if lim_lo[leave_row] <= lim_hi[leave_row] else AT_UPPER
            degen_run = degen_run + 1 if t_best < 1e-10 else 0

            x[basis] = bvals - t_best * w
            x[q] += direction * t_best
            leaving = basis[leave_row]
            x[leaving] = lower[leaving] if leave_to == AT_LOWER else upper[leaving]
            vstat[leaving] = leave_to
            vstat[q] = BASIC
            basis[leave_row] = q
            self._pivot(leave_row, q, d)

    # ---- dual iterations ---------------------------------------------
    def dual(self, d: np.ndarray, iter_limit: int) -> str:
        """Dual simplex with a bound-flipping ratio test.

        Scanning the breakpoints of the piecewise-linear dual objective
        in order, a candidate whose range cannot absorb the remaining
        violation is flipped to its other bound (no basis change) and
        the scan moves on; the candidate reached when the slope runs out
        pivots in.  Entering variables therefore never leave their own
        range, which kills the bouncing that a single-breakpoint rule
        produces on rows with wide coefficient spread.  After a run of
        degenerate steps the classic lowest-index rule takes over, which
        keeps the termination guarantee.
        """
        lower, upper, x, vstat, basis = (
            self.lower,
            self.upper,
            self.x,
            self.vstat,
            self.basis,
        )
        free_range = upper - lower
        degen_run = 0
        while True:
            if self.iterations >= iter_limit:
                return "limit"
            self.iterations += 1

            bvals = x[basis]
            below = lower[basis] - bvals
            above = bvals - upper[basis]
            viol = np.maximum(below, above)
            worst = float(viol.max(initial=0.0))
            if worst <= FEAS_TOL:
                return "optimal"
            if degen_run >= DEGEN_SWITCH:
                rows = np.flatnonzero(viol > FEAS_TOL)
                r = int(rows[np.argmin(basis[rows])])
            else:
                r = int(np.argmax(viol))
            to_lower = below[r] >= above[r]
            leaving = basis[r]

            row = self.T[r]
            if to_lower:
                elig = (
                    ((vstat == AT_LOWER) & (row < -PIVOT_TOL))
                    | ((vstat == AT_UPPER) & (row > PIVOT_TOL))
                ) & (free_range > 0)
            else:
                elig = (
                    ((vstat == AT_LOWER) & (row > PIVOT_TOL))
                    | ((vstat == AT_UPPER) & (row < -PIVOT_TOL))
                ) & (free_range > 0)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "infeasible"
            theta = np.abs(d[cand] / row[cand])

            flipped = False
            if degen_run >= DEGEN_SWITCH:
                best = float(theta.min())
                q = int(cand[theta <= best + 1e-12][0])
            else:
                q = -1
                slope = float(viol[r])
                for idx in np.argsort(theta, kind="stable"):
                    j = int(cand[idx])
                    absorb = free_range[j] * abs(row[j])
                    if not np.isfinite(absorb) or slope - absorb <= 1e-12:
                        q = j
                        break
                    slope -= absorb
                    # flip j across its range; values move, basis does not
                    if vstat[j] == AT_LOWER:
                        dxj = free_range[j]
                        vstat[j] = AT_UPPER
                    else:
                        dxj = -free_range[j]
                        vstat[j] = AT_LOWER
                    x[basis] -= dxj * self.T[:, j]
                    x[j] += dxj
                    flipped = True
                if q < 0:
                    # even flipping every candidate cannot repair the row
                    return "infeasible"
                if flipped:
                    bvals = x[basis]

            target = lower[leaving] if to_lower else upper[leaving]
            step = (x[leaving] - target) / row[q]
            degen_run = 0 if flipped or abs(step) >= 1e-10 else degen_run + 1
            x[basis] = bvals - step * self.T[:, q]
            x[q] += step
            x[leaving] = target
            vstat[leaving] = AT_LOWER if to_lower else AT_UPPER
            vstat[q] = BASIC
            basis[r] = q
            self._pivot(r, q, d)


def _cold_start(
    lp: StandardLp, lower: np.ndarray, upper: np.ndarray, iter_limit: int
) -> tuple[str, "_Workspace"]:
    """Two-phase solve from scratch; returns (status, workspace)."""
    m, n_total = lp.A.shape
    n_real = lp.n_real

    x = np.zeros(n_total)
    vstat = np.full(n_total, AT_LOWER, dtype=np.int8)
    x[:n_real] = lower[:n_real]

    res = lp.b - lp.A[:, :n_real] @ x[:n_real]
    basis = np.arange(n_real, n_total)
    vstat[basis] = BASIC
    x[basis] = res

    # phase 1: artificial bounds open toward the residual sign, cost
    # pushes them to zero
    lo1 = lower.copy()
    up1 = upper.copy()
    lo1[n_real:] = np.minimum(0.0, res)
    up1[n_real:] = np.maximum(0.0, res)
    c1 = np.zeros(n_total)
    c1[n_real:] = np.where(res >= 0.0, -1.0, 1.0)

    ws = _Workspace(lp, lo1, up1, basis, vstat, x)
    d = ws.reduced_costs(c1)
    status = ws.primal(c1, d, iter_limit)
    if status == "limit":
        return "limit", ws
    if np.max(np.abs(x[n_real:])) > 1e-6:
        return "infeasible", ws

    # lock artificials at zero; pivot basic ones out where possible
    ws.lower = lower
    ws.upper = upper
    x[n_real:] = np.where(np.abs(x[n_real:]) <= 1e-6, 0.0, x[n_real:])
    d2 = ws.reduced_costs(lp.c)
    for r in range(m):
        if ws.basis[r] >= n_real and abs(x[ws.basis[r]]) <= 1e-9:
            row = ws.T[r, :n_real]
            nb = np.flatnonzero(
                (np.abs(row) > 1e-7) & (ws.vstat[:n_real] != BASIC)
            )
            if nb.size:
                # zero-step pivot: values are unchanged, only the basis is
                q = int(nb[np.argmax(np.abs(row[nb]))])
                old = ws.basis[r]
                ws.vstat[old] = AT_LOWER
                x[old] = 0.0
                ws.vstat[q] = BASIC
                ws.basis[r] = q
                ws._pivot(r, q, d2)

    status = ws.primal(lp.c, d2, iter_limit)
    if status in ("limit", "unbounded"):
        return status, ws
    return "optimal", ws


def _warm_start(
    lp: StandardLp,
    lower: np.ndarray,
    upper: np.ndarray,
    basis: np.ndarray,
    vstat: np.ndarray,
    iter_limit: int,
) -> tuple[str, "_Workspace | None"]:
    """Dual simplex from a previous basis; "fallback" means go cold."""
    n_total = lp.A.shape[1]
    basis = basis.copy()
    vstat = vstat.copy()
    x = np.zeros(n_total)
    nonbasic = vstat != BASIC
    x[nonbasic] = np.where(
        vstat[nonbasic] == AT_UPPER, upper[nonbasic], lower[nonbasic]
    )
    # fixed or collapsed bounds: clamp nonbasics into range
    x[nonbasic] = np.clip(x[nonbasic], lower[nonbasic], upper[nonbasic])

    try:
        ws = _Workspace(lp, lower, upper, basis, vstat, x)
    except np.linalg.LinAlgError:  # pragma: no cover - singular basis
        return "fallback", None
    ws.refresh_basic_values()
    d = ws.reduced_costs(lp.c)

    # the stored basis was optimal for looser bounds, so d should be dual
    # feasible; bail out if it is badly off (numerical drift)
    bad = np.where(
        (ws.vstat == AT_LOWER) & (upper - lower > 0), d > 1e-5, False
    ) | np.where((ws.vstat == AT_UPPER) & (upper - lower > 0), d < -1e-5, False)
    if bool(bad.any()):
        return "fallback", ws

    status = ws.dual(d, iter_limit)
    if status == "limit":
        return "fallback", ws
    if status == "infeasible":
        return "infeasible", ws

    d = ws.reduced_costs(lp.c)
    status = ws.primal(lp.c, d, iter_limit)
    if status != "optimal":
        return "fallback", ws
    return "optimal", ws


def solve_workspace(
    lp: StandardLp,
    lower: np.ndarray,
    upper: np.ndarray,
    basis: np.ndarray | None = None,
    vstat: np.ndarray | None = None,
    iter_limit: int = 50000,
) -> tuple[str, _Workspace]:
    """Solve the LP and hand back the live workspace.

    Takes ownership of the bound arrays (artificial columns are forced
    to zero in place).  After an "optimal" return the workspace stays
    usable: edit its bound arrays in place and call reoptimize() to
    re-solve from the current basis without refactorizing.
    Statuses: "optimal" | "infeasible" | "unbounded" | "limit".
    """
    lower[lp.n_real :] = 0.0
    upper[lp.n_real :] = 0.0
    wasted = 0
    if basis is not None and vstat is not None:
        status, ws = _warm_start(lp, lower, upper, basis, vstat, iter_limit)
        if status != "fallback":
            return status, ws
        if ws is not None:
            wasted = ws.iterations
    status, ws = _cold_start(lp, lower, upper, iter_limit)
    ws.iterations += wasted
    return status, ws


def reoptimize(ws: _Workspace, iter_limit: int = 50000) -> str:
    """Re-solve after in-place bound edits on an optimal workspace.

    Tightening or relaxing bounds leaves the reduced costs dual
    feasible, so the dual simplex restores primal feasibility and a
    primal pass mops up.  The iteration limit counts the workspace
    lifetime total, not just this call.
    """
    if np.any(ws.lower > ws.upper):
        return "infeasible"
    ws.snap_to_bounds()
    d = ws.reduced_costs(ws.lp.c)
    status = ws.dual(d, iter_limit)
    if status != "optimal":
        return status
    d = ws.reduced_costs(ws.lp.c)
    return ws.primal(ws.lp.c, d, iter_limit)


def solve_lp(
    lp: StandardLp,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    basis: np.ndarray | None = None,
    vstat: np.ndarray | None = None,
    iter_limit: int = 50000,
) -> LpOutcome:
    """Solve the LP relaxation, warm-starting from a basis when given.

    lower/upper override the bounds of the standard form (same length as
    its column count); artificial columns must stay fixed at zero.
    """
    lo = lp.lower.copy() if lower is None else lower.copy()
    up = lp.upper.copy() if upper is None else upper.copy()
    status, ws = solve_workspace(lp, lo, up, basis, vstat, iter_limit)
    if status == "optimal":
        return LpOutcome(
            "optimal",
            ws.x.copy(),
            float(lp.c @ ws.x),
            ws.basis.copy(),
            ws.vstat.copy(),
            ws.iterations,
        )
    obj = np.inf if status == "unbounded" else np.nan
    return LpOutcome(status, None, obj, None, None, ws.iterations)
