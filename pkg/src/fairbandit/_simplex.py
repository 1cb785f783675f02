"""Dense two-phase simplex kernel.

Canonical form: maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq,
x >= 0.  Bland's smallest-index rule is used for both the entering and
leaving choices, so pivoting is deterministic and cannot cycle.  The
kernel is numba-compiled when numba is importable and runs as plain
Python otherwise (identical float64 arithmetic either way).
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
STALLED = 3

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
TIE_TOL = 1e-12


@njit(cache=True)
def solve_canonical(A_ub, b_ub, A_eq, b_eq, c):
    """Two-phase simplex. Returns (status, x, objective_value)."""
    m1 = A_ub.shape[0]
    m2 = A_eq.shape[0]
    m = m1 + m2
    n = c.shape[0]

    # Inequality rows with negative rhs flip into >= rows; those and all
    # equality rows need an artificial variable for the phase-1 basis.
    n_art = m2
    for i in range(m1):
        if b_ub[i] < 0.0:
            n_art += 1

    art0 = n + m1
    ncols = art0 + n_art
    T = np.zeros((m, ncols))
    b = np.zeros(m)
    basis = np.empty(m, np.int64)

    k_art = 0
    for i in range(m1):
        if b_ub[i] < 0.0:
            for j in range(n):
                T[i, j] = -A_ub[i, j]
            b[i] = -b_ub[i]
            T[i, n + i] = -1.0
            T[i, art0 + k_art] = 1.0
            basis[i] = art0 + k_art
            k_art += 1
        else:
            for j in range(n):
                T[i, j] = A_ub[i, j]
            b[i] = b_ub[i]
            T[i, n + i] = 1.0
            basis[i] = n + i
    for e in range(m2):
        i = m1 + e
        sgn = -1.0 if b_eq[e] < 0.0 else 1.0
        for j in range(n):
            T[i, j] = sgn * A_eq[e, j]
        b[i] = sgn * b_eq[e]
        T[i, art0 + k_art] = 1.0
        basis[i] = art0 + k_art
        k_art += 1

    x = np.zeros(n)
    r = np.zeros(ncols)
    maxit = 200 * (m + ncols) + 1000

    for phase in range(2):
        if phase == 0:
            if n_art == 0:
                continue
            # maximize -(sum of artificials), priced out for the basis
            for j in range(ncols):
                acc = -1.0 if j >= art0 else 0.0
                for i in range(m):
                    if basis[i] >= art0:
                        acc += T[i, j]
                r[j] = acc
            objval = 0.0
            for i in range(m):
                if basis[i] >= art0:
                    objval -= b[i]
            limit = ncols
        else:
            for j in range(ncols):
                cj = c[j] if j < n else 0.0
                acc = cj
                for i in range(m):
                    bi = basis[i]
                    if bi < n and c[bi] != 0.0:
                        acc -= c[bi] * T[i, j]
                r[j] = acc
            objval = 0.0
            for i in range(m):
                if basis[i] < n:
                    objval += c[basis[i]] * b[i]
            limit = art0

        it = 0
        while True:
            it += 1
            if it > maxit:
                return STALLED, x, 0.0
            pc = -1
            for j in range(limit):
                if r[j] > PIVOT_TOL:
                    pc = j
                    break
            if pc < 0:
                break
            pr = -1
            best = 0.0
            for i in range(m):
                a = T[i, pc]
                if a > PIVOT_TOL:
                    ratio = b[i] / a
                    if pr < 0 or ratio < best - TIE_TOL:
                        pr = i
                        best = ratio
                    elif ratio < best + TIE_TOL and basis[i] < basis[pr]:
                        pr = i
                        if ratio < best:
                            best = ratio
            if pr < 0:
                if phase == 1:
                    return UNBOUNDED, x, 0.0
                return STALLED, x, 0.0  # phase-1 objective is bounded
            piv = T[pr, pc]
            for j in range(ncols):
                T[pr, j] /= piv
            b[pr] /= piv
            for i in range(m):
                if i != pr:
                    f = T[i, pc]
                    if f != 0.0:
                        for j in range(ncols):
                            T[i, j] -= f * T[pr, j]
                        b[i] -= f * b[pr]
                        if b[i] < 0.0 and b[i] > -1e-13:
                            b[i] = 0.0
            f = r[pc]
            for j in range(ncols):
                r[j] -= f * T[pr, j]
            objval += f * b[pr]
            basis[pr] = pc

        if phase == 0:
            if objval < -FEAS_TOL:
                return INFEASIBLE, x, 0.0
            # drive leftover artificials out of the basis; rows where no
            # real pivot exists are redundant and ride along at rhs 0
            for i in range(m):
                if basis[i] >= art0:
                    pc = -1
                    for j in range(art0):
                        if abs(T[i, j]) > PIVOT_TOL:
                            pc = j
                            break
                    if pc >= 0:
                        piv = T[i, pc]
                        for j in range(ncols):
                            T[i, j] /= piv
                        b[i] /= piv
                        for i2 in range(m):
                            if i2 != i:
                                f = T[i2, pc]
                                if f != 0.0:
                                    for j in range(ncols):
                                        T[i2, j] -= f * T[i, j]
                                    b[i2] -= f * b[i]
                        basis[i] = pc

    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = b[i]
    return OPTIMAL, x, objval


@njit(cache=True)
def batch_welfare_dot(A_ub_stack, b_ub, A_eq, b_eq, obj_stack, weight, weight_inf):
    """Solve one LP per stacked slice and dot each solution with `weight`.

    A_ub_stack: (P, L, n) inequality blocks, b_ub: (L,), obj_stack: (P, n).
    weight_inf marks entries whose weight is +inf (the dot is +inf when
    the solution puts mass above 1e-12 there, their finite part is
    skipped).  Returns (values, statuses).
    """
    P = obj_stack.shape[0]
    n = obj_stack.shape[1]
    vals = np.empty(P)
    stats = np.empty(P, np.int64)
    for p in range(P):
        status, x, _ = solve_canonical(
            A_ub_stack[p], b_ub, A_eq, b_eq, obj_stack[p]
        )
        stats[p] = status
        if status != OPTIMAL:
            vals[p] = np.nan
            continue
        acc = 0.0
        hit_inf = False
        for j in range(n):
            if weight_inf[j]:
                if x[j] > 1e-12:
                    hit_inf = True
            else:
                acc += weight[j] * x[j]
        vals[p] = np.inf if hit_inf else acc
    return vals, stats
