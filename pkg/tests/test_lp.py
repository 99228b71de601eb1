"""Simplex solver checks: hand instances, the tableau oracle, L1 fits."""

import numpy as np
import pytest

from hdtrd.errors import InfeasibleError, InputError
from hdtrd.lp import LinearProgram, solve_l1_fit, solve_lp
from lp_oracle import tableau_solve


def _lp(cost, eq_lhs=None, eq_rhs=None, ineq_lhs=None, ineq_rhs=None, nonneg=None):
    m = len(cost)
    eq_lhs = np.zeros((0, m)) if eq_lhs is None else np.asarray(eq_lhs, dtype=float)
    eq_rhs = np.zeros(0) if eq_rhs is None else np.asarray(eq_rhs, dtype=float)
    ineq_lhs = np.zeros((0, m)) if ineq_lhs is None else np.asarray(ineq_lhs, dtype=float)
    ineq_rhs = np.zeros(0) if ineq_rhs is None else np.asarray(ineq_rhs, dtype=float)
    nonneg = np.ones(m, dtype=bool) if nonneg is None else np.asarray(nonneg, dtype=bool)
    return LinearProgram(cost, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs, nonneg)


def test_single_bound():
    sol = solve_lp(_lp([1.0], ineq_lhs=[[1.0]], ineq_rhs=[3.0]))
    assert sol.status == "optimal"
    assert abs(sol.x[0] - 3.0) < 1e-9
    assert abs(sol.objective - 3.0) < 1e-9


def test_unbounded():
    sol = solve_lp(_lp([-1.0]))
    assert sol.status == "unbounded"


def test_simplex_vertex():
    sol = solve_lp(_lp([1.0, 2.0, 3.0], eq_lhs=[[1.0, 1.0, 1.0]], eq_rhs=[1.0]))
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [1.0, 0.0, 0.0], atol=1e-9)
    assert abs(sol.objective - 1.0) < 1e-9


def test_infeasible():
    # x1 >= 3 and -x1 >= -1
    sol = solve_lp(_lp([1.0], ineq_lhs=[[1.0], [-1.0]], ineq_rhs=[3.0, -1.0]))
    assert sol.status == "infeasible"


def test_redundant_equalities_are_dropped():
    lp = _lp([1.0, 1.0],
             eq_lhs=[[1.0, 1.0], [2.0, 2.0]], eq_rhs=[1.0, 2.0])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert abs(sol.objective - 1.0) < 1e-9


def test_inconsistent_equalities_are_infeasible():
    lp = _lp([1.0, 1.0],
             eq_lhs=[[1.0, 1.0], [2.0, 2.0]], eq_rhs=[1.0, 3.0])
    assert solve_lp(lp).status == "infeasible"


def test_free_variable():
    # min x1 with x1 free and x1 >= -5: optimum at the bound
    lp = _lp([1.0], ineq_lhs=[[1.0]], ineq_rhs=[-5.0], nonneg=[False])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert abs(sol.x[0] + 5.0) < 1e-8


def test_non_finite_rejected():
    with pytest.raises(InputError):
        _lp([np.inf])


def _random_bounded_lp(rng, m=6, q=8, with_eq=False):
    a = rng.standard_normal((q, m))
    x0 = rng.uniform(0.2, 2.0, m)
    b = a @ x0 - rng.uniform(0.1, 1.0, q)  # x0 strictly feasible
    upper = np.full(m, 6.0)
    ineq_lhs = np.vstack([a, -np.eye(m)])  # add x <= 6 rows for boundedness
    ineq_rhs = np.concatenate([b, -upper])
    cost = rng.standard_normal(m)
    if with_eq:
        eq_lhs = np.ones((1, m))
        eq_rhs = np.array([x0.sum()])
        return _lp(cost, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs)
    return _lp(cost, ineq_lhs=ineq_lhs, ineq_rhs=ineq_rhs)


def test_random_lps_match_tableau_oracle():
    rng = np.random.default_rng(7)
    for k in range(60):
        lp = _random_bounded_lp(rng, with_eq=(k % 3 == 0))
        sol = solve_lp(lp)
        status, obj, _ = tableau_solve(lp)
        assert sol.status == "optimal" and status == "optimal"
        assert abs(sol.objective - obj) <= 1e-7 * (1 + abs(obj))


def test_basic_feasible_support_size():
    # at a vertex, active constraints bound the number of positive entries
    rng = np.random.default_rng(11)
    for _ in range(20):
        lp = _random_bounded_lp(rng)
        sol = solve_lp(lp)
        n_pos = int((sol.x > 1e-8).sum())
        resid = lp.ineq_lhs @ sol.x - lp.ineq_rhs
        n_active = int((np.abs(resid) < 1e-7).sum())
        assert n_pos <= n_active + int((sol.x <= 1e-8).sum())


def test_cost_scaling_equivariance():
    rng = np.random.default_rng(13)
    lp = _random_bounded_lp(rng)
    sol1 = solve_lp(lp)
    lp_scaled = LinearProgram(3.5 * lp.cost, lp.eq_lhs, lp.eq_rhs,
                              lp.ineq_lhs, lp.ineq_rhs, lp.nonneg_mask)
    sol2 = solve_lp(lp_scaled)
    assert abs(sol2.objective - 3.5 * sol1.objective) <= 1e-6 * (1 + abs(sol1.objective))
    # the scaled argmin must be optimal for the original cost too
    assert lp.cost @ sol2.x <= sol1.objective + 1e-6 * (1 + abs(sol1.objective))


# ---------------------------------------------------------------- L1 fitting


def test_l1_identity_design():
    w = solve_l1_fit(np.eye(2), [1.0, 2.0], np.ones((1, 2)), [3.0])
    np.testing.assert_allclose(w, [1.0, 2.0], atol=1e-8)


def test_l1_exact_fit_in_feasible_cone():
    rng = np.random.default_rng(3)
    d = rng.standard_normal((6, 4))
    w_true = rng.uniform(0.5, 1.5, 4)
    target = d @ w_true
    w = solve_l1_fit(d, target, np.ones((1, 4)), [w_true.sum()])
    np.testing.assert_allclose(d @ w, target, atol=1e-7)


def test_l1_infeasible_constraints():
    with pytest.raises(InfeasibleError):
        solve_l1_fit(np.eye(2), [0.0, 0.0],
                     np.array([[1.0, 1.0], [1.0, 1.0]]), [1.0, 2.0])


def test_l1_random_instance_matches_oracle_lp():
    rng = np.random.default_rng(5)
    d = rng.standard_normal((30, 10))
    target = rng.standard_normal(30)
    eq = np.ones((1, 10))
    rhs = np.array([1.0])
    w = solve_l1_fit(d, target, eq, rhs)
    obj = np.abs(d @ w - target).sum()
    # brute-force the same LP with the independent tableau implementation
    cost = np.concatenate([np.zeros(10), np.ones(30)])
    ineq_lhs = np.vstack([np.hstack([-d, np.eye(30)]), np.hstack([d, np.eye(30)])])
    ineq_rhs = np.concatenate([-target, target])
    lp = LinearProgram(cost, np.hstack([eq, np.zeros((1, 30))]), rhs,
                       ineq_lhs, ineq_rhs, np.ones(40, dtype=bool))
    status, obj_oracle, _ = tableau_solve(lp)
    assert status == "optimal"
    assert abs(obj - obj_oracle) <= 1e-7 * (1 + abs(obj_oracle))
