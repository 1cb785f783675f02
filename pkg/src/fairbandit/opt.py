"""Optimization layer: constrained welfare optimum, robust welfare LP,
welfare-budgeted exploration LP, and the grid term bounding exploration cost.

All LPs share one flattening convention: an (n, m) allocation becomes the
row-major vector x of length n*m, columns sums become m equality rows,
and fairness constraints <B_l, X> >= c_l become -B_l . x <= -c_l.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _simplex, lp
from .constraints import ConfidenceBox, ConstraintSet, robust_coefficients
from .core import frobenius_welfare

BUDGET_ETA = 1e-9  # feasibility relaxation so the robust optimum itself always passes


class OptError(RuntimeError):
    """An optimization contract was violated (infeasible where feasibility
    is guaranteed, or an unbounded/failed solve)."""


@dataclass(frozen=True)
class GridSpec:
    """Lattice of the confidence box: multiples of `spacing`, at most `cap`
    points (seeded uniform subsample beyond that)."""

    spacing: float
    cap: int = 512
    sample_seed: int = 0

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")


def grid_for_horizon(T: int, cap: int = 512, sample_seed: int = 0) -> GridSpec:
    return GridSpec(spacing=1.0 / math.sqrt(T), cap=cap, sample_seed=sample_seed)


def _column_sum_rows(n: int, m: int):
    A_eq = np.zeros((m, n * m))
    for k in range(m):
        A_eq[k, k::m] = 1.0
    return A_eq, np.ones(m)


def _solve_allocation_lp(B: np.ndarray, thresholds: np.ndarray, objective: np.ndarray,
                         n: int, m: int, extra_ub=None) -> lp.LpSolution:
    L = B.shape[0]
    A_ub = -B.reshape(L, n * m)
    b_ub = -np.asarray(thresholds, dtype=float)
    if extra_ub is not None:
        rows, rhs = extra_ub
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, rhs])
    A_eq, b_eq = _column_sum_rows(n, m)
    return lp.solve_arrays(A_ub, b_ub, A_eq, b_eq, np.asarray(objective, dtype=float).ravel())


def solve_constrained(objective: np.ndarray, mu: np.ndarray, cs: ConstraintSet,
                      thresholds: np.ndarray = None) -> np.ndarray:
    """argmax <X, objective> over valid allocations satisfying cs for mu.
    `thresholds` overrides cs.thresholds (used for relaxed variants)."""
    thr = cs.thresholds if thresholds is None else np.asarray(thresholds, dtype=float)
    sol = _solve_allocation_lp(cs.coeff_fn(np.asarray(mu, dtype=float)),
                               thr, objective, cs.n, cs.m)
    if sol.status != lp.OPTIMAL:
        raise OptError(f"constrained welfare LP came back {sol.status}")
    return sol.x.reshape(cs.n, cs.m)


def solve_Y(mu: np.ndarray, cs: ConstraintSet) -> np.ndarray:
    """Welfare-maximizing valid allocation subject to the constraints at mu."""
    return solve_constrained(mu, mu, cs)


def solve_robust_welfare(box: ConfidenceBox, cs: ConstraintSet, mu_U: np.ndarray) -> np.ndarray:
    """Maximize optimistic welfare <X, mu_U> subject to the constraints
    holding for every mu in the box (worst-corner reduction)."""
    worst = robust_coefficients(cs, box)
    sol = _solve_allocation_lp(worst, cs.thresholds, mu_U, cs.n, cs.m)
    if sol.status != lp.OPTIMAL:
        lo, hi = box.effective_bounds()
        raise OptError(
            f"robust welfare LP came back {sol.status}; "
            f"box lo={np.round(lo, 4).tolist()}, hi={np.round(hi, 4).tolist()}"
        )
    return sol.x.reshape(cs.n, cs.m)


def _entry_lattice(lo: float, hi: float, spacing: float):
    j0 = math.ceil(lo / spacing - 1e-12)
    j1 = math.floor(hi / spacing + 1e-12)
    if j0 > j1:
        return np.array([(lo + hi) / 2.0])
    return np.arange(j0, j1 + 1, dtype=float) * spacing


def _grid_stack(box: ConfidenceBox, g: GridSpec) -> np.ndarray:
    """(P, n, m) stack of lattice points; deterministic for fixed inputs."""
    lo, hi = box.effective_bounds()
    shape = lo.shape
    entries = [_entry_lattice(lo_v, hi_v, g.spacing)
               for lo_v, hi_v in zip(lo.ravel(), hi.ravel())]
    counts = np.array([len(v) for v in entries], dtype=np.int64)
    total = 1
    for c in counts:
        total *= int(c)
    E = len(entries)
    if total <= g.cap:
        mesh = np.meshgrid(*entries, indexing="ij")
        flat = np.stack([a.ravel() for a in mesh], axis=-1)
        return flat.reshape(-1, *shape)
    rng = np.random.Generator(np.random.Philox(key=int(g.sample_seed) & ((1 << 64) - 1)))
    chosen = []
    seen = set()
    while len(chosen) < g.cap:
        draw = rng.integers(0, counts, size=(2 * g.cap, E))
        for row in draw:
            t = tuple(row)
            if t not in seen:
                seen.add(t)
                chosen.append(row)
                if len(chosen) == g.cap:
                    break
    idx = np.array(chosen)
    vals = np.empty((g.cap, E))
    for e in range(E):
        vals[:, e] = entries[e][idx[:, e]]
    return vals.reshape(g.cap, *shape)


def grid_points(box: ConfidenceBox, g: GridSpec) -> list:
    """Lattice points of the box as a list of (n, m) matrices.

    Entries whose interval holds no spacing multiple fall back to the
    interval midpoint, so the grid is nonempty at every round.
    """
    return list(_grid_stack(box, g))


def frob_with_inf(X: np.ndarray, W: np.ndarray) -> float:
    """<X, W> where W may hold +inf entries (inf counts only where X > 0)."""
    W = np.asarray(W, dtype=float)
    X = np.asarray(X, dtype=float)
    finite = np.isfinite(W)
    if np.all(finite):
        return float((X * W).sum())
    if np.any(~finite & (X > 1e-12)):
        return float("inf")
    return float((X[finite] * W[finite]).sum())


def grid_max_term(box: ConfidenceBox, cs: ConstraintSet, eps: np.ndarray,
                  g: GridSpec) -> float:
    """max over grid points mu of <Y^mu, eps>.

    Grid points are unique by construction, so each Y^mu is solved once
    per round.  Feasibility of every point follows from feasibility of
    the box's lower corner (coefficients are monotone and X >= 0).
    """
    stack = _grid_stack(box, g)
    P = stack.shape[0]
    B_stack = cs.coeff_batch(stack)
    A_ub_stack = np.ascontiguousarray(-B_stack.reshape(P, cs.L, cs.n * cs.m))
    obj_stack = np.ascontiguousarray(stack.reshape(P, cs.n * cs.m))
    A_eq, b_eq = _column_sum_rows(cs.n, cs.m)
    w = np.asarray(eps, dtype=float).ravel()
    w_inf = ~np.isfinite(w)
    vals, stats = _simplex.batch_welfare_dot(
        A_ub_stack, -cs.thresholds.astype(float), A_eq, b_eq, obj_stack,
        np.where(w_inf, 0.0, w), w_inf,
    )
    if np.any(stats != _simplex.OPTIMAL):
        bad = int(np.argmax(stats != _simplex.OPTIMAL))
        raise OptError(
            f"grid point {bad} of {P} gave LP status {stats[bad]} "
            f"(box lower corner should be feasible)"
        )
    return float(vals.max())


def slack_budget(Xhat: np.ndarray, mu_U: np.ndarray, eps: np.ndarray,
                 gridmax: float, cs: ConstraintSet) -> float:
    """Welfare floor for the exploration LP:
    <Xhat, mu_U> - 4*K*C_P2*gridmax - 2*<Xhat, eps> - eta."""
    if math.isinf(gridmax):
        return float("-inf")
    value = frobenius_welfare(Xhat, mu_U)
    value -= 4.0 * cs.lipschitz_K * cs.c_p2 * gridmax
    value -= 2.0 * frob_with_inf(Xhat, eps)
    return value - BUDGET_ETA


def solve_explore(box: ConfidenceBox, cs: ConstraintSet, mu_U: np.ndarray,
                  target: tuple, budget: float) -> np.ndarray:
    """Maximize X[target] under the robust constraints and the welfare floor.

    The robust optimum that produced `budget` is itself feasible here, so
    infeasibility indicates a broken caller and raises.
    """
    i, k = target
    worst = robust_coefficients(cs, box)
    objective = np.zeros((cs.n, cs.m))
    objective[i, k] = 1.0
    extra = None
    if math.isfinite(budget):
        extra = (-np.asarray(mu_U, dtype=float).reshape(1, -1), np.array([-budget]))
    sol = _solve_allocation_lp(worst, cs.thresholds, objective, cs.n, cs.m, extra_ub=extra)
    if sol.status != lp.OPTIMAL:
        raise OptError(
            f"exploration LP for target {target} came back {sol.status} "
            f"with budget {budget!r}; the robust optimum should be feasible"
        )
    return sol.x.reshape(cs.n, cs.m)


def average_explorers(Zs) -> np.ndarray:
    """Entrywise mean of the n*m exploration allocations."""
    stack = np.asarray(Zs, dtype=float)
    if stack.ndim != 3 or stack.shape[0] == 0:
        raise ValueError("expected a nonempty sequence of equally shaped allocation matrices")
    return stack.mean(axis=0)
