"""L1-penalized least squares by cyclic coordinate descent.

Single-response fits, a row-separable multi-response variant (all
responses share one design and one penalty), K-fold cross-validation
over a penalty grid, and the rate-based default penalty used when no
cross-validation is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InputError

DEFAULT_TOL = 1e-7
DEFAULT_KKT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000


@dataclass
class LassoProblem:
    """One penalized least-squares instance.

    ``design`` is n x d, ``response`` length n.  ``standardize`` centers
    both before fitting, which is equivalent to an unpenalized intercept.
    """

    design: np.ndarray
    response: np.ndarray
    lam: float
    standardize: bool = False

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        self.response = np.asarray(self.response, dtype=float)
        if self.design.ndim != 2:
            raise InputError("design must be a 2-d array")
        n, d = self.design.shape
        if n < 2 or d < 1:
            raise InputError(f"need n >= 2 and d >= 1, got shape {(n, d)}")
        if self.response.shape != (n,):
            raise InputError("response length must match design rows")
        if not np.all(np.isfinite(self.design)) or not np.all(np.isfinite(self.response)):
            raise InputError("design/response contain non-finite entries")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise InputError(f"penalty must be >= 0, got {self.lam}")


@dataclass
class LassoFit:
    """Solution container for a single-response fit."""

    coef: np.ndarray
    intercept: float
    objective: float
    n_iter: int
    kkt_max_violation: float
    objective_path: np.ndarray = field(repr=False, default=None)


@dataclass
class MultiLassoFit:
    """Stacked per-row solutions of the multi-response problem.

    ``h_matrix`` is p1 x p2; row j holds the coefficients of response j
    regressed on the shared design.
    """

    h_matrix: np.ndarray
    per_row_objectives: np.ndarray
    n_iter: int = 0
    kkt_max_violation: float = 0.0


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _kkt_violation(grad, coef, lam):
    # Stationarity residual of (1/2n)||y-Xb||^2 + lam*||b||_1:
    # active coordinates need grad == lam*sign(b), inactive |grad| <= lam.
    active = coef != 0
    viol = np.where(active, np.abs(grad - lam * np.sign(coef)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


def _cd_single(x, y, lam, tol, kkt_tol, max_iter, coef0=None):
    """Cyclic coordinate descent with residual updates.

    Returns (coef, residual, n_sweeps, kkt_violation, objective_path).
    Raises ConvergenceError when the sweep cap is hit first.
    """
    n, d = x.shape
    col_sq = np.einsum("ij,ij->j", x, x) / n
    coef = np.zeros(d) if coef0 is None else coef0.copy()
    resid = y - x @ coef if coef0 is not None and coef.any() else y.copy()
    obj_path = []
    live = col_sq > 0
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(d):
            if not live[j]:
                continue
            g = x[:, j] @ resid / n + col_sq[j] * coef[j]
            new = _soft(g, lam) / col_sq[j]
            delta = new - coef[j]
            if delta != 0.0:
                resid -= delta * x[:, j]
                coef[j] = new
                max_delta = max(max_delta, abs(delta))
        obj_path.append(0.5 * resid @ resid / n + lam * np.abs(coef).sum())
        if max_delta < tol:
            grad = x.T @ resid / n
            kkt = _kkt_violation(grad, coef, lam)
            if kkt <= kkt_tol:
                return coef, resid, sweep, kkt, np.asarray(obj_path)
    grad = x.T @ resid / n
    kkt = _kkt_violation(grad, coef, lam)
    last = LassoFit(coef, 0.0, obj_path[-1], max_iter, kkt, np.asarray(obj_path))
    raise ConvergenceError(
        f"coordinate descent did not reach tol={tol} / kkt_tol={kkt_tol} "
        f"within {max_iter} sweeps (kkt violation {kkt:.3e})",
        last_fit=last,
    )


def lasso_fit(problem: LassoProblem, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER, kkt_tol: float = DEFAULT_KKT_TOL) -> LassoFit:
    """Minimize (1/2n)||y - Xb||^2 + lam*||b||_1 to the given tolerances.

    Convergence requires both a full sweep with max coefficient change
    below ``tol`` and a KKT stationarity residual below ``kkt_tol``.
    """
    if not (tol > 0):
        raise InputError("tol must be positive")
    x, y = problem.design, problem.response
    intercept = 0.0
    if problem.standardize:
        x_mean = x.mean(axis=0)
        y_mean = y.mean()
        x = x - x_mean
        y = y - y_mean
    coef, resid, sweeps, kkt, obj_path = _cd_single(x, y, problem.lam, tol, kkt_tol, max_iter)
    if problem.standardize:
        intercept = float(y_mean - x_mean @ coef)
    objective = 0.5 * resid @ resid / x.shape[0] + problem.lam * np.abs(coef).sum()
    return LassoFit(coef, intercept, float(objective), sweeps, kkt, obj_path)


def multi_lasso_fit(x: np.ndarray, z: np.ndarray, lam: float,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    kkt_tol: float = DEFAULT_KKT_TOL) -> MultiLassoFit:
    """Regress every column of ``x`` on the shared design ``z``.

    The penalty sum_j ||h_j||_1 is row separable, so this equals p1
    independent single-response fits; they are run in lockstep with the
    coordinate updates vectorized across responses.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim != 2 or z.ndim != 2 or x.shape[0] != z.shape[0]:
        raise InputError("x and z must be 2-d with a shared row count")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(z)):
        raise InputError("x/z contain non-finite entries")
    if not np.isfinite(lam) or lam < 0:
        raise InputError(f"penalty must be >= 0, got {lam}")
    n, p1 = x.shape
    p2 = z.shape[1]
    col_sq = np.einsum("ij,ij->j", z, z) / n
    live = col_sq > 0
    b = np.zeros((p2, p1))
    resid = x.copy()
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p2):
            if not live[j]:
                continue
            g = z[:, j] @ resid / n + col_sq[j] * b[j]
            new = _soft(g, lam) / col_sq[j]
            delta = new - b[j]
            d_max = np.abs(delta).max() if delta.size else 0.0
            if d_max > 0.0:
                resid -= np.outer(z[:, j], delta)
                b[j] = new
                max_delta = max(max_delta, d_max)
        if max_delta < tol:
            grad = z.T @ resid / n
            per_resp = np.where(b != 0, np.abs(grad - lam * np.sign(b)),
                                np.maximum(np.abs(grad) - lam, 0.0))
            kkt = float(per_resp.max()) if per_resp.size else 0.0
            if kkt <= kkt_tol:
                objectives = 0.5 * np.einsum("ij,ij->j", resid, resid) / n \
                    + lam * np.abs(b).sum(axis=0)
                return MultiLassoFit(b.T.copy(), objectives, sweep, kkt)
    grad = z.T @ resid / n
    per_resp = np.where(b != 0, np.abs(grad - lam * np.sign(b)),
                        np.maximum(np.abs(grad) - lam, 0.0))
    worst = int(np.argmax(per_resp.max(axis=0))) if per_resp.size else 0
    objectives = 0.5 * np.einsum("ij,ij->j", resid, resid) / n + lam * np.abs(b).sum(axis=0)
    raise ConvergenceError(
        f"multi-response coordinate descent did not converge within "
        f"{max_iter} sweeps (worst response row {worst})",
        last_fit=MultiLassoFit(b.T.copy(), objectives, max_iter,
                               float(per_resp.max()) if per_resp.size else 0.0))


def lasso_cv(design: np.ndarray, response: np.ndarray, lambda_grid,
             folds: int, seed: int) -> tuple[float, np.ndarray]:
    """Pick the penalty minimizing mean out-of-fold squared prediction error.

    The grid must be strictly decreasing; ties go to the larger penalty.
    Fits along the grid are warm started within each fold.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise InputError("lambda grid is empty")
    if grid.size > 1 and not np.all(np.diff(grid) < 0):
        raise InputError("lambda grid must be strictly decreasing")
    if folds < 2:
        raise InputError("need at least 2 folds")
    n = design.shape[0]
    if n < folds:
        raise InputError(f"n={n} is smaller than folds={folds}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    chunks = np.array_split(perm, folds)
    sq_err = np.zeros(grid.size)
    for test_idx in chunks:
        train = np.setdiff1d(perm, test_idx, assume_unique=True)
        xt, yt = design[train], response[train]
        xv, yv = design[test_idx], response[test_idx]
        coef = None
        for i, lam in enumerate(grid):
            coef, _, _, _, _ = _cd_single(xt, yt, lam, DEFAULT_TOL,
                                          DEFAULT_KKT_TOL, DEFAULT_MAX_ITER, coef0=coef)
            pred = xv @ coef
            sq_err[i] += float(((yv - pred) ** 2).sum())
    cv_errors = sq_err / n
    best = int(np.argmin(cv_errors))  # first minimum = largest penalty
    return float(grid[best]), cv_errors


def _ridge_sigma(design: np.ndarray, responses: np.ndarray) -> float:
    """Pooled residual scale from a lightly penalized ridge fit.

    ``responses`` may be a vector or an n x k matrix sharing the design;
    uses whichever of the primal/dual forms is smaller.
    """
    x = np.asarray(design, dtype=float)
    ys = np.atleast_2d(np.asarray(responses, dtype=float).T).T
    n, d = x.shape
    alpha = 0.05 * np.einsum("ij,ij->", x, x) / max(d, 1)
    if alpha <= 0:
        return float(np.sqrt(np.mean(ys**2)))
    if d <= n:
        g = x.T @ x + alpha * np.eye(d)
        coefs = np.linalg.solve(g, x.T @ ys)
        resid = ys - x @ coefs
    else:
        k = x @ x.T + alpha * np.eye(n)
        resid = alpha * np.linalg.solve(k, ys)
    return float(np.sqrt(np.mean(resid**2)))


def default_lambda(design: np.ndarray, responses: np.ndarray, c: float = 1.0) -> float:
    """Rate-based penalty c * sigma_hat * sqrt(2 log d / n).

    Used whenever a penalty is requested as ``"auto"``; sigma_hat comes
    from a preliminary ridge fit (pooled across responses if several).
    """
    x = np.asarray(design, dtype=float)
    n, d = x.shape
    sigma = _ridge_sigma(x, responses)
    return float(c * sigma * math.sqrt(2.0 * math.log(max(d, 2)) / n))


def resolve_lambda(value, design, responses, cv_grid_size: int = 12,
                   cv_folds: int = 5, cv_seed: int = 0) -> float:
    """Map a penalty spec to a number.

    Accepts a float, ``"auto"`` (rate rule) or ``"cv"`` (K-fold CV over a
    geometric grid below the null threshold).
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise InputError("penalty must be >= 0")
        return float(value)
    if value == "auto":
        return default_lambda(design, responses)
    if value == "cv":
        x = np.asarray(design, dtype=float)
        ys = np.atleast_2d(np.asarray(responses, dtype=float).T).T
        n = x.shape[0]
        lam_max = float(np.max(np.abs(x.T @ ys)) / n)
        if lam_max <= 0:
            return 0.0
        grid = np.geomspace(lam_max, lam_max * 1e-3, cv_grid_size)
        if ys.shape[1] == 1:
            best, _ = lasso_cv(x, ys[:, 0], grid, cv_folds, cv_seed)
            return best
        # multi-response: CV the aggregate prediction loss with one shared
        # penalty, using the same folds for every response
        rng = np.random.default_rng(cv_seed)
        perm = rng.permutation(n)
        chunks = np.array_split(perm, cv_folds)
        sq_err = np.zeros(grid.size)
        for test_idx in chunks:
            train = np.setdiff1d(perm, test_idx, assume_unique=True)
            for i, lam in enumerate(grid):
                fit = multi_lasso_fit(ys[train], x[train], lam)
                pred = x[test_idx] @ fit.h_matrix.T
                sq_err[i] += float(((ys[test_idx] - pred) ** 2).sum())
        return float(grid[int(np.argmin(sq_err))])
    raise InputError(f"penalty spec {value!r} is not a number, 'auto' or 'cv'")
