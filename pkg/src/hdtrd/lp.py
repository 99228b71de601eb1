"""Dense linear programming used by the spectrum-recovery programs.

The problem container and the L1-fit compilation (auxiliary slack bounds
wtilde >= +-(design @ w - target)) are local; the solve itself is
delegated to HiGHS, since the collocation programs carry near-collinear
Vandermonde-style columns that defeat a textbook dense simplex. Degenerate
equality systems are still pre-reduced here so that dependent-but-
consistent rows are dropped and inconsistent ones reported as infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import HdtrdError, InfeasibleError, InputError

DEFAULT_FEAS_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """min cost @ x  subject to  eq_lhs @ x == eq_rhs,
    ineq_lhs @ x >= ineq_rhs, and x[j] >= 0 where nonneg_mask[j]."""

    cost: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    ineq_lhs: np.ndarray
    ineq_rhs: np.ndarray
    nonneg_mask: np.ndarray

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float).ravel()
        m = self.cost.size
        self.eq_lhs = np.asarray(self.eq_lhs, dtype=float).reshape(-1, m)
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).ravel()
        self.ineq_lhs = np.asarray(self.ineq_lhs, dtype=float).reshape(-1, m)
        self.ineq_rhs = np.asarray(self.ineq_rhs, dtype=float).ravel()
        self.nonneg_mask = np.asarray(self.nonneg_mask, dtype=bool).ravel()
        if self.eq_rhs.size != self.eq_lhs.shape[0]:
            raise InputError("equality rhs length mismatch")
        if self.ineq_rhs.size != self.ineq_lhs.shape[0]:
            raise InputError("inequality rhs length mismatch")
        if self.nonneg_mask.size != m:
            raise InputError("nonneg mask length mismatch")
        for arr in (self.cost, self.eq_lhs, self.eq_rhs, self.ineq_lhs, self.ineq_rhs):
            if not np.all(np.isfinite(arr)):
                raise InputError("linear program contains non-finite entries")

    @property
    def n_vars(self) -> int:
        return self.cost.size


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str


def _reduce_equalities(lhs, rhs, tol=1e-11):
    """Row-echelon elimination; drops dependent rows, flags inconsistency.

    Returns (lhs', rhs') or None when some dependent row is inconsistent.
    """
    a = np.hstack([lhs.astype(float), rhs.reshape(-1, 1).astype(float)])
    r, m1 = a.shape
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    row = 0
    for col in range(m1 - 1):
        if row >= r:
            break
        piv = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[piv, col]) <= tol * scale:
            continue
        a[[row, piv]] = a[[piv, row]]
        a[row] /= a[row, col]
        others = np.arange(r) != row
        a[others] -= np.outer(a[others, col], a[row])
        row += 1
    kept = a[:row]
    for i in range(row, r):
        if abs(a[i, -1]) > tol * scale:
            return None
    return kept[:, :-1], kept[:, -1]


def solve_lp(lp: LinearProgram, feas_tol: float = DEFAULT_FEAS_TOL) -> LpSolution:
    """Solve a dense LP; infeasibility/unboundedness reported via status,
    never by raising. The returned point is re-verified against the
    original constraints before the status is declared optimal."""
    m_vars = lp.n_vars
    reduced = _reduce_equalities(lp.eq_lhs, lp.eq_rhs)
    if reduced is None:
        return LpSolution(np.full(m_vars, np.nan), np.nan, INFEASIBLE)
    eq_lhs, eq_rhs = reduced

    bounds = [(0.0, None) if keep else (None, None) for keep in lp.nonneg_mask]
    tol = max(feas_tol, 1e-10)
    res = linprog(
        lp.cost,
        A_ub=-lp.ineq_lhs if lp.ineq_rhs.size else None,
        b_ub=-lp.ineq_rhs if lp.ineq_rhs.size else None,
        A_eq=eq_lhs if eq_rhs.size else None,
        b_eq=eq_rhs if eq_rhs.size else None,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": tol,
        },
    )
    if res.status == 2:
        return LpSolution(np.full(m_vars, np.nan), np.nan, INFEASIBLE)
    if res.status == 3:
        return LpSolution(np.full(m_vars, np.nan), -np.inf, UNBOUNDED)
    if res.status != 0:
        raise HdtrdError(f"linear program solve failed: {res.message}")

    x = np.asarray(res.x, dtype=float)
    objective = float(lp.cost @ x)
    bad = _max_violation(lp, x)
    if bad > max(feas_tol, 1e-7) * (1 + _rhs_scale(lp)):
        raise HdtrdError(f"solver returned an infeasible point (violation {bad:.3e})")
    return LpSolution(x, objective, OPTIMAL)


def _rhs_scale(lp):
    vals = [np.abs(lp.eq_rhs).max() if lp.eq_rhs.size else 0.0,
            np.abs(lp.ineq_rhs).max() if lp.ineq_rhs.size else 0.0]
    return max(vals)


def _max_violation(lp, x):
    viol = 0.0
    if lp.eq_rhs.size:
        viol = max(viol, float(np.abs(lp.eq_lhs @ x - lp.eq_rhs).max()))
    if lp.ineq_rhs.size:
        viol = max(viol, float(np.maximum(lp.ineq_rhs - lp.ineq_lhs @ x, 0.0).max()))
    if lp.nonneg_mask.any():
        viol = max(viol, float(np.maximum(-x[lp.nonneg_mask], 0.0).max()))
    return viol


def solve_l1_fit(design: np.ndarray, target: np.ndarray,
                 eq_lhs: np.ndarray, eq_rhs: np.ndarray,
                 feas_tol: float = DEFAULT_FEAS_TOL) -> np.ndarray:
    """Minimize ||design @ w - target||_1 over w >= 0 with eq_lhs @ w == eq_rhs.

    Compiled to an LP through auxiliary bounds wtilde >= +-(design @ w - target),
    one slack per residual row.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float).ravel()
    if design.ndim != 2 or design.shape[0] != target.size or design.size == 0:
        raise InputError("design must be a nonempty q x m matrix matching target")
    q, m = design.shape
    eq_lhs = np.asarray(eq_lhs, dtype=float).reshape(-1, m)
    eq_rhs = np.asarray(eq_rhs, dtype=float).ravel()
    cost = np.concatenate([np.zeros(m), np.ones(q)])
    eq_block = np.hstack([eq_lhs, np.zeros((eq_lhs.shape[0], q))])
    eye = np.eye(q)
    ineq_lhs = np.vstack([np.hstack([-design, eye]), np.hstack([design, eye])])
    ineq_rhs = np.concatenate([-target, target])
    lp = LinearProgram(cost, eq_block, eq_rhs, ineq_lhs, ineq_rhs,
                       np.ones(m + q, dtype=bool))
    sol = solve_lp(lp, feas_tol)
    if sol.status == INFEASIBLE:
        raise InfeasibleError(
            "equality block eq_lhs @ w == eq_rhs admits no nonnegative solution")
    if sol.status != OPTIMAL:
        raise HdtrdError(f"L1 fit ended with status {sol.status}")
    return sol.x[:m]
