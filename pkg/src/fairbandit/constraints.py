"""Linear fairness constraint families and their robust box reduction.

A constraint family is a set {(B_l(mu), c_l)} of L linear constraints on
allocations: X satisfies the family for mu iff <B_l(mu), X> >= c_l for
every l.  Both built-in families (proportionality, envy-freeness) fill
each coefficient position from a single mu cell, monotonically, which is
what lets the "for all mu in a box" constraint collapse to one
worst-corner coefficient matrix per l.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import ENVY_FREENESS, PROPORTIONALITY, uar_allocation

SLACK_TOL = 1e-9


@dataclass(frozen=True)
class ConstraintSet:
    """Family {(B_l(mu), c_l)} plus the constants used by the UCB policy.

    corner_rule[l, i, k] tags how B_l(mu)[i, k] moves with the mu cell
    that fills it: +1 increasing, -1 decreasing, 0 constant.
    """

    kind: str
    n: int
    m: int
    L: int
    thresholds: np.ndarray
    lipschitz_K: float
    c_p2: float
    c_p3: float
    gamma0: float
    corner_rule: np.ndarray
    coeff_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    coeff_batch: Callable[[np.ndarray], np.ndarray] = field(repr=False)


@dataclass(frozen=True)
class ConfidenceBox:
    """Entrywise interval set around empirical means.

    radius entries may be +inf (unsampled cells); with clamping the
    effective interval is [max(center - radius, lo), min(center + radius, hi)].
    """

    center: np.ndarray
    radius: np.ndarray
    clamp_lo: Optional[float] = None
    clamp_hi: Optional[float] = None

    def effective_bounds(self):
        lo = self.center - self.radius
        hi = self.center + self.radius
        if self.clamp_lo is not None:
            lo = np.maximum(lo, self.clamp_lo)
        if self.clamp_hi is not None:
            hi = np.minimum(hi, self.clamp_hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("confidence box is unbounded; clamp it to [a, b]")
        if np.any(lo > hi + 1e-12):
            worst = int(np.argmax(lo - hi))
            raise ValueError(
                f"empty effective box at flat index {worst}: lo={lo.flat[worst]}, hi={hi.flat[worst]}"
            )
        return lo, np.maximum(hi, lo)

    def contains(self, mu: np.ndarray, tol: float = 1e-12) -> bool:
        lo, hi = self.effective_bounds()
        return bool(np.all(mu >= lo - tol) and np.all(mu <= hi + tol))


def proportionality(n: int, m: int, a: float, b: float) -> ConstraintSet:
    """Each player values their share at least 1/n: B_l has row l equal to
    mu's row l and zeros elsewhere, threshold 1/n."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")

    def coeff(mu: np.ndarray) -> np.ndarray:
        B = np.zeros((n, n, m))
        for i in range(n):
            B[i, i, :] = mu[i, :]
        return B

    def coeff_batch(mus: np.ndarray) -> np.ndarray:
        P = mus.shape[0]
        B = np.zeros((P, n, n, m))
        for i in range(n):
            B[:, i, i, :] = mus[:, i, :]
        return B

    rule = np.zeros((n, n, m), dtype=np.int8)
    for i in range(n):
        rule[i, i, :] = 1
    return ConstraintSet(
        kind=PROPORTIONALITY,
        n=n,
        m=m,
        L=n,
        thresholds=np.full(n, 1.0 / n),
        lipschitz_K=1.0,
        c_p2=b * n / a,
        c_p3=b * n / a,
        gamma0=a / (b * n),
        corner_rule=rule,
        coeff_fn=coeff,
        coeff_batch=coeff_batch,
    )


def envy_freeness(n: int, m: int, a: float, b: float) -> ConstraintSet:
    """No player prefers another's column weights: one constraint per
    ordered pair (i, j), coefficients +mu_i on row i and -mu_i on row j."""
    if n < 2:
        raise ValueError("envy-freeness needs at least 2 players")
    pairs = [(i, j) for i in range(n) for j in range(n) if j != i]
    L = len(pairs)

    def coeff(mu: np.ndarray) -> np.ndarray:
        B = np.zeros((L, n, m))
        for l, (i, j) in enumerate(pairs):
            B[l, i, :] = mu[i, :]
            B[l, j, :] = -mu[i, :]
        return B

    def coeff_batch(mus: np.ndarray) -> np.ndarray:
        P = mus.shape[0]
        B = np.zeros((P, L, n, m))
        for l, (i, j) in enumerate(pairs):
            B[:, l, i, :] = mus[:, i, :]
            B[:, l, j, :] = -mus[:, i, :]
        return B

    rule = np.zeros((L, n, m), dtype=np.int8)
    for l, (i, j) in enumerate(pairs):
        rule[l, i, :] = 1
        rule[l, j, :] = -1
    return ConstraintSet(
        kind=ENVY_FREENESS,
        n=n,
        m=m,
        L=L,
        thresholds=np.zeros(L),
        lipschitz_K=1.0,
        c_p2=b * n / a,
        c_p3=b * n / a,
        gamma0=a / (b * n),
        corner_rule=rule,
        coeff_fn=coeff,
        coeff_batch=coeff_batch,
    )


def make(kind: str, n: int, m: int, a: float, b: float) -> ConstraintSet:
    if kind == PROPORTIONALITY:
        return proportionality(n, m, a, b)
    if kind == ENVY_FREENESS:
        return envy_freeness(n, m, a, b)
    raise ValueError(f"unknown constraint kind {kind!r}")


def evaluate(X: np.ndarray, mu: np.ndarray, cs: ConstraintSet) -> np.ndarray:
    """Slack vector: <B_l(mu), X> - c_l for every l."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if X.shape != (cs.n, cs.m) or mu.shape != (cs.n, cs.m):
        raise ValueError(
            f"expected shapes ({cs.n}, {cs.m}); got X {X.shape}, mu {mu.shape}"
        )
    B = cs.coeff_fn(mu)
    return np.einsum("lik,ik->l", B, X) - cs.thresholds


def robust_coefficients(cs: ConstraintSet, box: ConfidenceBox) -> np.ndarray:
    """Worst-case coefficient matrices over the box.

    Entries tagged increasing take the lower-corner value, decreasing the
    upper-corner value.  Allocations are entrywise nonnegative, so
    <B_worst, X> lower-bounds <B_l(mu), X> for every mu in the box.
    """
    lo, hi = box.effective_bounds()
    B_lo = cs.coeff_fn(lo)
    B_hi = cs.coeff_fn(hi)
    B_ct = cs.coeff_fn(np.clip(box.center, lo, hi))
    worst = np.where(cs.corner_rule > 0, B_lo, np.where(cs.corner_rule < 0, B_hi, B_ct))
    return worst


def robust_coefficients_batch(cs: ConstraintSet, lo: np.ndarray, hi: np.ndarray,
                              centers: np.ndarray) -> np.ndarray:
    B_lo = cs.coeff_batch(lo)
    B_hi = cs.coeff_batch(hi)
    B_ct = cs.coeff_batch(np.clip(centers, lo, hi))
    rule = cs.corner_rule[None, :, :, :]
    return np.where(rule > 0, B_lo, np.where(rule < 0, B_hi, B_ct))


def check_property_uar(cs: ConstraintSet, mu: np.ndarray) -> bool:
    """Direct UAR feasibility: min slack of the UAR allocation >= -tol."""
    slacks = evaluate(uar_allocation(cs.n, cs.m), mu, cs)
    return bool(slacks.min() >= -SLACK_TOL)


def check_lipschitz(cs: ConstraintSet, mu1: np.ndarray, mu2: np.ndarray,
                    eps: np.ndarray) -> bool:
    """Positionwise |B_l(mu1) - B_l(mu2)| <= K * eps check."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(np.abs(mu1 - mu2) > eps + 1e-12):
        raise ValueError("precondition violated: |mu1 - mu2| exceeds eps somewhere")
    diff = np.abs(cs.coeff_fn(mu1) - cs.coeff_fn(mu2))
    bound = cs.lipschitz_K * eps[None, :, :]
    return bool(np.all(diff <= bound + 1e-12))
