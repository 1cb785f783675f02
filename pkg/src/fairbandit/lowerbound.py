"""Hard instance pair for envy-freeness and the regret decomposition check.

Two 3x3 normalized value matrices differing by epsilon = T^(-1/3) in two
entries of the middle row.  Against the first matrix, the EF-constrained
welfare optimum is a permutation matrix and the per-round regret of any
EF-feasible allocation is at least (1/42)(X[1,1] + X[1,2] + X[2,1])
(0-based indices).  Value bounds for these instances are a = 1/42 and
b = 40/42 (the displayed entries are already normalized).
"""

from dataclasses import dataclass

import numpy as np

from .constraints import envy_freeness, evaluate
from .core import frobenius_welfare
from .sim import RunResult

LB_A = 1.0 / 42.0
LB_B = 40.0 / 42.0

# epsilon = T^(-1/3) stays within [a, b] at (1,2) only once T >= 2744
LB_T_BOUNDS_OK = 2744


@dataclass
class LbInstancePair:
    mu1: np.ndarray
    mu2: np.ndarray
    epsilon: float
    T: int


def lb_instances(T: int) -> LbInstancePair:
    """The two hard matrices with epsilon = T^(-1/3)."""
    if T < 8:
        raise ValueError(f"T must be at least 8, got {T}")
    eps = T ** (-1.0 / 3.0)
    mu1 = np.array([
        [20.0, 21.0, 1.0],
        [19.0, 19.0, 4.0],
        [1.0, 1.0, 40.0],
    ]) / 42.0
    mu2 = mu1.copy()
    mu2[1, 1] += eps
    mu2[1, 2] -= eps
    return LbInstancePair(mu1=mu1, mu2=mu2, epsilon=eps, T=T)


def ef_optimal_mu1() -> np.ndarray:
    """EF-constrained welfare optimum for mu1: a permutation matrix."""
    return np.array([
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ])


def regret_decomposition_check(X: np.ndarray, tol: float = 1e-9):
    """For EF-feasible X under mu1, per-round regret dominates
    (1/42)(X[1,1] + X[1,2] + X[2,1]).  Returns (lhs, rhs, ok)."""
    X = np.asarray(X, dtype=float)
    mu1 = lb_instances(LB_T_BOUNDS_OK).mu1
    cs = envy_freeness(3, 3, LB_A, LB_B)
    slacks = evaluate(X, mu1, cs)
    if slacks.min() < -1e-9:
        raise ValueError(
            f"X violates envy-freeness for mu1 (min slack {slacks.min()!r}); "
            "the decomposition is only claimed for EF-feasible allocations"
        )
    lhs = frobenius_welfare(ef_optimal_mu1(), mu1) - frobenius_welfare(X, mu1)
    rhs = (X[1, 1] + X[1, 2] + X[2, 1]) / 42.0
    return lhs, rhs, bool(lhs >= rhs - tol)


def lb_statistic(result: RunResult) -> float:
    """sum over rounds of X^t[1,1] + X^t[1,2] + X^t[2,1] (0-based)."""
    if result.allocations is None:
        raise ValueError("run was recorded without full allocations")
    A = result.allocations
    if A.shape[0] == 0:
        return 0.0
    return float(A[:, 1, 1].sum() + A[:, 1, 2].sum() + A[:, 2, 1].sum())
