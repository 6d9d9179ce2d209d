"""Linear-programming core: relaxation and deterministic LP solving.

relax() drops integrality (binaries become continuous in [0, 1]);
solve_lp() computes the optimum with scipy's HiGHS backend.  CompiledLp
caches the sparse matrices so branch-and-bound can re-solve the same model
under different variable fixings without rebuilding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .model import LinearConstraint, LpVariable, MilpModel

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"
ITERATION_LIMIT = "ITERATION_LIMIT"

FEAS_TOL = 1e-7
OPT_TOL = 1e-9


@dataclass(frozen=True)
class LpSolution:
    status: str
    values: np.ndarray | None
    objective: float
    iterations: int


def relax(m: MilpModel) -> MilpModel:
    """Same model with every binary re-declared continuous in [0, 1]."""
    variables = tuple(
        replace(v, kind="C") if v.kind == "B" else v for v in m.variables
    )
    return MilpModel(
        variables=variables,
        constraints=m.constraints,
        objective=m.objective,
        x_index=m.x_index,
        y_index=m.y_index,
        theta_index=m.theta_index,
        f_index=m.f_index,
    )


class CompiledLp:
    """Sparse scipy arrays of a continuous model, reusable across bound changes."""

    def __init__(self, m: MilpModel):
        if any(v.kind != "C" for v in m.variables):
            raise ValueError("CompiledLp expects a relaxed (all-continuous) model")
        self.model = m
        n = m.n_variables
        self.cost = -np.asarray(m.objective, dtype=float)  # linprog minimizes
        self.bounds = np.array(
            [(v.lb, v.ub) for v in m.variables], dtype=float
        ).reshape(n, 2) if n else np.zeros((0, 2))

        def build(rows: list[LinearConstraint], flip: set[int]):
            data, ri, ci, rhs = [], [], [], []
            for r_idx, con in enumerate(rows):
                sign = -1.0 if r_idx in flip else 1.0
                for v, coef in con.coeffs:
                    data.append(sign * coef)
                    ri.append(r_idx)
                    ci.append(v)
                rhs.append(sign * con.rhs)
            mat = sparse.csr_matrix(
                (data, (ri, ci)), shape=(len(rows), n)
            ) if rows else None
            return mat, (np.asarray(rhs) if rows else None)

        ub_rows, flip = [], set()
        eq_rows = []
        for con in m.constraints:
            if con.sense == "=":
                eq_rows.append(con)
            else:
                if con.sense == ">=":
                    flip.add(len(ub_rows))
                ub_rows.append(con)
        self.a_ub, self.b_ub = build(ub_rows, flip)
        self.a_eq, self.b_eq = build(eq_rows, set())

    def solve(
        self,
        tol: float = FEAS_TOL,
        max_iter: int | None = None,
        fixed: dict[int, float] | None = None,
    ) -> LpSolution:
        if self.model.n_variables == 0:
            return LpSolution(OPTIMAL, np.zeros(0), 0.0, 0)
        bounds = self.bounds
        if fixed:
            bounds = bounds.copy()
            for v, val in fixed.items():
                bounds[v, 0] = bounds[v, 1] = val
        options = {
            "presolve": True,
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": max(OPT_TOL, 1e-9),
        }
        if max_iter is not None:
            options["maxiter"] = max_iter
        res = linprog(
            self.cost,
            A_ub=self.a_ub,
            b_ub=self.b_ub,
            A_eq=self.a_eq,
            b_eq=self.b_eq,
            bounds=bounds,
            method="highs",
            options=options,
        )
        status = {
            0: OPTIMAL,
            1: ITERATION_LIMIT,
            2: INFEASIBLE,
            3: UNBOUNDED,
        }.get(res.status, ITERATION_LIMIT)
        values = np.asarray(res.x) if res.x is not None else None
        obj = -float(res.fun) if status == OPTIMAL and res.fun is not None else float("nan")
        iters = int(res.nit) if res.nit is not None else 0
        return LpSolution(status=status, values=values, objective=obj, iterations=iters)


def solve_lp(
    m: MilpModel, tol: float = FEAS_TOL, max_iter: int | None = None
) -> LpSolution:
    """Optimum of an all-continuous model; never raises on solver outcomes."""
    return CompiledLp(m).solve(tol=tol, max_iter=max_iter)
