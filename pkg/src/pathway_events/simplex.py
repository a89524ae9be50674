"""Dense two-phase primal simplex with bounded variables.

Independent of HiGHS; used to cross-check pathway optima and as the reference
solver in the LP oracle tests.  The tableau is kept in Fortran order so the
rank-one pivot update runs through BLAS ``dger`` in place.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import blas

from .lp import LinearProgram, LPIterationLimit, LPResult, LPUnbounded

_PIVOT_TOL = 1e-9


def _standardize(p: LinearProgram):
    """Rewrite ``p`` as ``min c'y, A y = b, 0 <= y <= u`` with ``b >= 0``.

    Returns the pieces plus a recovery map ``x = x0 + R @ y[:n_struct]``.
    """
    A = p.A.toarray()
    m, n = A.shape
    cols, costs, uppers = [], [], []
    recover = []  # (original index, coefficient) per structural column
    x0 = np.zeros(n)
    b = p.rhs.astype(float).copy()
    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        a = A[:, j]
        if np.isfinite(lo):
            x0[j] = lo
            b -= a * lo
            cols.append(a)
            costs.append(p.c[j])
            uppers.append(hi - lo)
            recover.append((j, 1.0))
        elif np.isfinite(hi):
            x0[j] = hi
            b -= a * hi
            cols.append(-a)
            costs.append(-p.c[j])
            uppers.append(np.inf)
            recover.append((j, -1.0))
        else:
            cols.append(a)
            costs.append(p.c[j])
            uppers.append(np.inf)
            recover.append((j, 1.0))
            cols.append(-a)
            costs.append(-p.c[j])
            uppers.append(np.inf)
            recover.append((j, -1.0))
    n_struct = len(cols)
    slack_of_row = {}
    for i, s in enumerate(p.senses):
        if s == "=":
            continue
        e = np.zeros(m)
        e[i] = 1.0 if s == "<" else -1.0
        slack_of_row[i] = len(cols)
        cols.append(e)
        costs.append(0.0)
        uppers.append(np.inf)
    M = np.column_stack(cols) if cols else np.zeros((m, 0))
    flip = b < 0
    M[flip] *= -1
    b[flip] *= -1
    return M, b, np.array(costs), np.array(uppers), n_struct, slack_of_row, recover, x0


class _Tableau:
    def __init__(self, M, b, u, basis, tol, max_iter):
        self.T = np.asfortranarray(M.copy())
        self.u = u
        self.basis = np.array(basis)
        self.at_upper = np.zeros(M.shape[1], dtype=bool)
        self.xB = b.copy()
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def reduced_costs(self, c):
        return c - c[self.basis] @ self.T

    def run(self, c):
        T, tol = self.T, self.tol
        d = self.reduced_costs(c)
        is_basic = np.zeros(T.shape[1], dtype=bool)
        is_basic[self.basis] = True
        degenerate_streak = 0
        while True:
            score = np.where(self.at_upper, d, -d)
            score[is_basic] = 0.0
            score[self.u <= 0] = 0.0
            if degenerate_streak > 50:
                cand = np.flatnonzero(score > tol)
                if cand.size == 0:
                    return
                j = int(cand[0])
            else:
                j = int(np.argmax(score))
                if score[j] <= tol:
                    return
            if self.iterations >= self.max_iter:
                raise LPIterationLimit(f"simplex iteration limit {self.max_iter} reached")
            self.iterations += 1
            direction = -1.0 if self.at_upper[j] else 1.0
            alpha = T[:, j] * direction
            uB = self.u[self.basis]
            theta = self.u[j]
            r = -1
            to_upper = False
            dec = alpha > _PIVOT_TOL
            if dec.any():
                ratios = self.xB[dec] / alpha[dec]
                k = int(np.argmin(ratios))
                if ratios[k] < theta:
                    theta = ratios[k]
                    r = int(np.flatnonzero(dec)[k])
                    to_upper = False
            inc = (alpha < -_PIVOT_TOL) & np.isfinite(uB)
            if inc.any():
                ratios = (uB[inc] - self.xB[inc]) / -alpha[inc]
                k = int(np.argmin(ratios))
                if ratios[k] < theta:
                    theta = ratios[k]
                    r = int(np.flatnonzero(inc)[k])
                    to_upper = True
            if not np.isfinite(theta):
                raise LPUnbounded("objective unbounded below")
            theta = max(theta, 0.0)
            degenerate_streak = degenerate_streak + 1 if theta <= 1e-12 else 0
            self.xB -= theta * alpha
            if r < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            start = self.u[j] if self.at_upper[j] else 0.0
            leaving = self.basis[r]
            self.at_upper[leaving] = to_upper
            self.at_upper[j] = False
            self.xB[r] = start + direction * theta
            # pivot
            piv = T[r, j]
            row = T[r, :] / piv
            col = T[:, j].copy()
            col[r] = 0.0
            T = blas.dger(-1.0, col, row, a=T, overwrite_a=1)
            T[r, :] = row
            self.T = T
            d = d - d[j] * row
            d[j] = 0.0
            is_basic[leaving] = False
            is_basic[j] = True
            self.basis[r] = j


def solve_dense(p: LinearProgram, tol: float = 1e-9, max_iter: int | None = None) -> LPResult:
    M, b, c, u, n_struct, slack_of_row, recover, x0 = _standardize(p)
    m, n = M.shape
    tol = max(tol, 1e-10)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    basis = []
    art_rows = []
    for i in range(m):
        s = slack_of_row.get(i)
        if s is not None and M[i, s] > 0:
            basis.append(s)
        else:
            basis.append(None)
            art_rows.append(i)
    n_art = len(art_rows)
    if n_art:
        art = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art[i, k] = 1.0
            basis[i] = n + k
        M = np.hstack([M, art])
        u = np.concatenate([u, np.zeros(n_art) + np.inf])
        c = np.concatenate([c, np.zeros(n_art)])
    tab = _Tableau(M, b, u, basis, tol, max_iter)

    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    infeasibility = 0.0
    if n_art:
        c1 = np.zeros(n + n_art)
        c1[n:] = 1.0
        tab.run(c1)
        infeasibility = float(tab.xB[tab.basis >= n].sum())
        if infeasibility > 1e-7 * scale:
            return LPResult("infeasible", None, None, tab.iterations,
                            "phase 1 residual", infeasibility=infeasibility)
        # artificials may stay basic at zero but can never move again
        tab.u = tab.u.copy()
        tab.u[n:] = 0.0
    tab.run(c)

    y = np.zeros(M.shape[1])
    y[tab.at_upper] = tab.u[tab.at_upper]
    y[tab.basis] = tab.xB
    y = _refine(M, b, y, tab.basis, tab.u)
    x = x0.copy()
    for k, (j, coef) in enumerate(recover):
        x[j] += coef * y[k]
    obj = float(p.c @ x) + p.objective_offset
    return LPResult("optimal", x, obj, tab.iterations, "optimal", infeasibility=infeasibility)


def _refine(M, b, y, basis, u):
    """Recompute basic values from the original columns to shed pivot drift."""
    nonbasic = np.ones(M.shape[1], dtype=bool)
    nonbasic[basis] = False
    rhs = b - M[:, nonbasic] @ y[nonbasic]
    try:
        xB = np.linalg.solve(M[:, basis], rhs)
    except np.linalg.LinAlgError:
        return y
    y = y.copy()
    y[basis] = np.clip(xB, 0.0, u[basis])
    return y
