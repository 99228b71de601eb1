"""Independent Big-M dense-tableau simplex used only as a test oracle.

Deliberately naive: full tableau, Bland's rule everywhere (no cycling),
meant for small random instances. Shares nothing with hdtrd.lp beyond
the LinearProgram container.
"""

import numpy as np

TOL = 1e-9


def tableau_solve(lp):
    """Return (status, objective, x) for a LinearProgram."""
    m_vars = lp.n_vars
    # split free variables, add surplus for ">=" rows
    owners, signs = [], []
    for j in range(m_vars):
        owners.append(j)
        signs.append(1.0)
        if not lp.nonneg_mask[j]:
            owners.append(j)
            signs.append(-1.0)
    owners = np.array(owners, dtype=int)
    signs = np.array(signs)
    n_split = owners.size
    q = lp.ineq_lhs.shape[0]
    r = lp.eq_lhs.shape[0]
    n_rows = q + r
    n_cols = n_split + q  # structural + surplus

    a = np.zeros((n_rows, n_cols))
    b = np.zeros(n_rows)
    if r:
        a[:r, :n_split] = lp.eq_lhs[:, owners] * signs
        b[:r] = lp.eq_rhs
    if q:
        a[r:, :n_split] = lp.ineq_lhs[:, owners] * signs
        a[r:, n_split:] = -np.eye(q)
        b[r:] = lp.ineq_rhs
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1

    c = np.zeros(n_cols)
    c[:n_split] = lp.cost[owners] * signs
    big_m = 1e5 * (1.0 + np.abs(c).max() + np.abs(b).max())

    # tableau with artificial identity basis
    t = np.zeros((n_rows + 1, n_cols + n_rows + 1))
    t[:n_rows, :n_cols] = a
    t[:n_rows, n_cols:n_cols + n_rows] = np.eye(n_rows)
    t[:n_rows, -1] = b
    t[-1, :n_cols] = c
    t[-1, n_cols:n_cols + n_rows] = big_m
    basis = list(range(n_cols, n_cols + n_rows))
    # price out the artificial basis
    for i in range(n_rows):
        t[-1] -= big_m * t[i]

    scale = 1.0 + np.abs(c).max()
    for _ in range(200_000):
        enter = -1
        for j in range(n_cols + n_rows):
            if t[-1, j] < -TOL * scale:
                enter = j
                break  # Bland: first improving column
        if enter < 0:
            break
        ratios = [(t[i, -1] / t[i, enter], basis[i], i)
                  for i in range(n_rows) if t[i, enter] > TOL]
        if not ratios:
            art_val = sum(t[i, -1] for i in range(n_rows) if basis[i] >= n_cols)
            return ("infeasible" if art_val > 1e-7 else "unbounded", None, None)
        _, _, row = min(ratios)
        t[row] /= t[row, enter]
        for i in range(n_rows + 1):
            if i != row and t[i, enter] != 0.0:
                t[i] -= t[i, enter] * t[row]
        basis[row] = enter
    else:
        raise RuntimeError("oracle simplex did not terminate")

    art_val = sum(t[i, -1] for i in range(n_rows) if basis[i] >= n_cols)
    if art_val > 1e-7 * (1 + np.abs(b).max()):
        return "infeasible", None, None
    x_std = np.zeros(n_cols)
    for i, col in enumerate(basis):
        if col < n_cols:
            x_std[col] = t[i, -1]
    x = np.zeros(m_vars)
    np.add.at(x, owners, signs * x_std[:n_split])
    return "optimal", float(lp.cost @ x), x
