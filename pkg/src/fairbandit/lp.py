"""Self-contained dense LP solver plus a brute-force vertex oracle.

Problems are stated as maximization over variables with box bounds
[lo, hi] (lo >= 0, hi may be +inf).  Internally variables are shifted by
lo and finite upper bounds become extra inequality rows, after which the
two-phase simplex kernel runs on the canonical nonnegative form.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _simplex

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_STATUS_NAMES = {
    _simplex.OPTIMAL: OPTIMAL,
    _simplex.INFEASIBLE: INFEASIBLE,
    _simplex.UNBOUNDED: UNBOUNDED,
}


@dataclass
class LinearProgram:
    """maximize objective.x  s.t.  eq rows hold, ub rows are coeff.x <= rhs."""

    objective: np.ndarray
    eq_constraints: list = field(default_factory=list)
    ub_constraints: list = field(default_factory=list)
    var_bounds: list = None  # per-variable (lo, hi); default (0, inf)

    def n_vars(self) -> int:
        return len(self.objective)

    def bounds_arrays(self):
        n = self.n_vars()
        if self.var_bounds is None:
            return np.zeros(n), np.full(n, np.inf)
        lo = np.array([b[0] for b in self.var_bounds], dtype=float)
        hi = np.array([b[1] for b in self.var_bounds], dtype=float)
        return lo, hi

    def validate(self) -> None:
        n = self.n_vars()
        for name, rows in (("eq", self.eq_constraints), ("ub", self.ub_constraints)):
            for idx, (coeff, _rhs) in enumerate(rows):
                if len(coeff) != n:
                    raise ValueError(
                        f"{name} constraint {idx} has {len(coeff)} coefficients, expected {n}"
                    )
        if self.var_bounds is not None:
            if len(self.var_bounds) != n:
                raise ValueError(
                    f"var_bounds has {len(self.var_bounds)} entries, expected {n}"
                )
            lo, hi = self.bounds_arrays()
            if np.any(lo < 0) or np.any(lo > hi):
                raise ValueError("var_bounds must satisfy 0 <= lo <= hi")


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float


def _stack(rows, n):
    if not rows:
        return np.zeros((0, n)), np.zeros(0)
    A = np.array([np.asarray(c, dtype=float) for c, _ in rows])
    b = np.array([float(r) for _, r in rows])
    return A, b


def solve_arrays(A_ub, b_ub, A_eq, b_eq, c) -> LpSolution:
    """Canonical-form entry point (x >= 0); shared with the batch kernel."""
    status, x, val = _simplex.solve_canonical(
        np.ascontiguousarray(A_ub, dtype=np.float64),
        np.ascontiguousarray(b_ub, dtype=np.float64),
        np.ascontiguousarray(A_eq, dtype=np.float64),
        np.ascontiguousarray(b_eq, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.float64),
    )
    if status == _simplex.STALLED:
        raise RuntimeError("simplex failed to converge (pivot limit reached)")
    return LpSolution(_STATUS_NAMES[status], x, val if status == _simplex.OPTIMAL else float("nan"))


def solve(lp: LinearProgram) -> LpSolution:
    """Solve a general LP. Deterministic: Bland pivoting, fixed row order."""
    lp.validate()
    n = lp.n_vars()
    c = np.asarray(lp.objective, dtype=float)
    lo, hi = lp.bounds_arrays()

    A_ub, b_ub = _stack(lp.ub_constraints, n)
    A_eq, b_eq = _stack(lp.eq_constraints, n)

    # shift x = lo + y, y >= 0; finite upper bounds become rows y_j <= hi-lo
    if A_ub.size:
        b_ub = b_ub - A_ub @ lo
    if A_eq.size:
        b_eq = b_eq - A_eq @ lo
    finite = np.isfinite(hi)
    if np.any(finite):
        extra = np.zeros((int(finite.sum()), n))
        extra_rhs = np.empty(int(finite.sum()))
        for r, j in enumerate(np.flatnonzero(finite)):
            extra[r, j] = 1.0
            extra_rhs[r] = hi[j] - lo[j]
        A_ub = np.vstack([A_ub, extra]) if A_ub.size else extra
        b_ub = np.concatenate([b_ub, extra_rhs]) if b_ub.size else extra_rhs

    sol = solve_arrays(A_ub, b_ub, A_eq, b_eq, c)
    if sol.status == OPTIMAL:
        x = sol.x + lo
        return LpSolution(OPTIMAL, x, float(sol.objective_value + c @ lo))
    return LpSolution(sol.status, np.zeros(n), float("nan"))


def enumerate_vertices(lp: LinearProgram, tol: float = 1e-9) -> list:
    """All basic feasible solutions, found by brute-force plane intersection.

    Test oracle only; refuses more than 10 variables.
    """
    lp.validate()
    n = lp.n_vars()
    if n > 10:
        raise ValueError(f"enumerate_vertices supports at most 10 variables, got {n}")
    lo, hi = lp.bounds_arrays()
    A_ub, b_ub = _stack(lp.ub_constraints, n)
    A_eq, b_eq = _stack(lp.eq_constraints, n)

    planes = []
    for row, rhs in zip(A_ub, b_ub):
        planes.append((row, rhs))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, lo[j]))
        if np.isfinite(hi[j]):
            planes.append((e.copy(), hi[j]))

    n_eq = len(b_eq)
    need = n - n_eq
    if need < 0:
        return []

    vertices = []
    seen = set()
    for combo in combinations(range(len(planes)), need):
        A = np.empty((n, n))
        rhs = np.empty(n)
        A[:n_eq] = A_eq
        rhs[:n_eq] = b_eq
        for r, idx in enumerate(combo):
            A[n_eq + r] = planes[idx][0]
            rhs[n_eq + r] = planes[idx][1]
        try:
            x = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        if np.max(np.abs(A @ x - rhs)) > 1e-7:
            continue
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            continue
        if A_ub.size and np.any(A_ub @ x > b_ub + tol):
            continue
        if A_eq.size and np.max(np.abs(A_eq @ x - b_eq)) > tol:
            continue
        key = tuple(np.round(x, 9))
        if key not in seen:
            seen.add(key)
            vertices.append(x)
    return vertices
