"""Linear programs and the solver interface used by the pathway model.

Two interchangeable backends sit behind :func:`lp_solve`:

``highs``
    scipy's HiGHS dual simplex (the default, used for every pathway run).
``simplex``
    the dense bounded-variable primal simplex in :mod:`pathway_events.simplex`,
    kept as an independent implementation for cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


class LPError(RuntimeError):
    pass


class LPUnbounded(LPError):
    pass


class LPIterationLimit(LPError):
    pass


@dataclass
class LinearProgram:
    """``min c @ x`` subject to ``A x (sense) rhs`` and ``lb <= x <= ub``."""

    var_names: list[str]
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray  # "<", "=", ">"
    rhs: np.ndarray
    row_names: list[str]
    objective_offset: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def validate(self) -> None:
        n, m = self.n_vars, self.n_rows
        if self.A.shape != (m, n):
            raise ValueError(f"constraint matrix shape {self.A.shape} != ({m}, {n})")
        for arr, what in ((self.c, "objective"), (self.A.data, "constraint"), (self.rhs, "rhs")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite {what} coefficient")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb > self.ub):
            raise ValueError("invalid variable bounds")
        if not set(np.unique(self.senses)) <= {"<", "=", ">"}:
            raise ValueError("unknown constraint sense")

    def row(self, name: str) -> tuple[dict[str, float], str, float]:
        """Readable view of one constraint row: ({var: coef}, sense, rhs)."""
        i = self.row_names.index(name)
        start, stop = self.A.indptr[i], self.A.indptr[i + 1]
        coefs = {self.var_names[j]: float(v)
                 for j, v in zip(self.A.indices[start:stop], self.A.data[start:stop])}
        return coefs, str(self.senses[i]), float(self.rhs[i])

    def residuals(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of ``x``."""
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        le, eq, ge = self.senses == "<", self.senses == "=", self.senses == ">"
        viol[le] = np.maximum(ax[le] - self.rhs[le], 0)
        viol[ge] = np.maximum(self.rhs[ge] - ax[ge], 0)
        viol[eq] = np.abs(ax[eq] - self.rhs[eq])
        bnd = np.maximum(self.lb - x, 0).max(initial=0.0)
        bnd = max(bnd, np.maximum(x - self.ub, 0).max(initial=0.0))
        return float(max(viol.max(initial=0.0), bnd))


class LPBuilder:
    """Incremental construction of a :class:`LinearProgram` by variable name."""

    def __init__(self):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.cost: list[float] = []
        self.rows: list[str] = []
        self.row_index: dict[str, int] = {}
        self._ri: list[int] = []
        self._ci: list[int] = []
        self._val: list[float] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.offset = 0.0

    def var(self, name: str, lb: float = 0.0, ub: float = np.inf, cost: float = 0.0) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        self.index[name] = len(self.names)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.cost.append(cost)
        return self.index[name]

    def add_cost(self, idx: int, amount: float) -> None:
        self.cost[idx] += amount

    def set_bounds(self, idx: int, lb: float | None = None, ub: float | None = None) -> None:
        if lb is not None:
            self.lb[idx] = lb
        if ub is not None:
            self.ub[idx] = ub

    def row(self, name: str, coefs: Mapping[int, float], sense: str, rhs: float) -> int:
        if name in self.row_index:
            raise ValueError(f"duplicate row {name}")
        if sense not in ("<", "=", ">"):
            raise ValueError(f"bad sense {sense!r}")
        i = len(self.rows)
        self.row_index[name] = i
        self.rows.append(name)
        for j, v in coefs.items():
            if v != 0.0:
                self._ri.append(i)
                self._ci.append(j)
                self._val.append(float(v))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        return i

    def build(self) -> LinearProgram:
        m, n = len(self.rows), len(self.names)
        A = sp.coo_matrix((self._val, (self._ri, self._ci)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        return LinearProgram(
            var_names=list(self.names),
            lb=np.array(self.lb, dtype=float),
            ub=np.array(self.ub, dtype=float),
            c=np.array(self.cost, dtype=float),
            A=A,
            senses=np.array(self.senses, dtype="<U1"),
            rhs=np.array(self.rhs, dtype=float),
            row_names=list(self.rows),
            objective_offset=self.offset,
        )


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float | None
    iterations: int = 0
    message: str = ""
    # phase-1 residual for the simplex backend; None when not available
    infeasibility: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def lp_solve(p: LinearProgram, tol: float = 1e-9, method: str = "highs",
             max_iter: int | None = None) -> LPResult:
    """Solve ``p``; infeasibility is a result, unboundedness and iteration limits raise."""
    p.validate()
    if method == "highs":
        return _solve_highs(p, tol, max_iter)
    if method == "simplex":
        from .simplex import solve_dense

        return solve_dense(p, tol=tol, max_iter=max_iter)
    raise ValueError(f"unknown LP method {method!r}")


def _solve_highs(p: LinearProgram, tol: float, max_iter: int | None) -> LPResult:
    le, ge, eq = p.senses == "<", p.senses == ">", p.senses == "="
    ineq = le | ge
    sign = np.where(ge, -1.0, 1.0)
    A_ub = sp.diags(sign[ineq]) @ p.A[ineq] if ineq.any() else None
    b_ub = (sign * p.rhs)[ineq] if ineq.any() else None
    A_eq = p.A[eq] if eq.any() else None
    b_eq = p.rhs[eq] if eq.any() else None
    lb = np.where(np.isfinite(p.lb), p.lb, None)
    ub = np.where(np.isfinite(p.ub), p.ub, None)
    tol = max(tol, 1e-10)
    options = {
        "primal_feasibility_tolerance": tol,
        "dual_feasibility_tolerance": tol,
        "presolve": True,
    }
    if max_iter is not None:
        options["maxiter"] = max_iter
    res = linprog(p.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=list(zip(lb, ub)), method="highs-ds", options=options)
    nit = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        return LPResult("optimal", np.asarray(res.x), float(res.fun) + p.objective_offset,
                        nit, res.message)
    if res.status == 2:
        return LPResult("infeasible", None, None, nit, res.message)
    if res.status == 3:
        raise LPUnbounded(res.message)
    if res.status == 1:
        raise LPIterationLimit(res.message)
    raise LPError(f"HiGHS failed: {res.message}")
