"""Constructive procedures behind the continuity and slack lemmas, plus
checkers for their stated guarantees.

construct_xprime perturbs a constrained optimum into an allocation whose
proportionality constraints all have slack at least gamma (or falls back
to UAR when total slack is small).  construct_w repairs a solution of
the eps-relaxed proportionality LP into an exactly proportional one by
transferring allocation from positive-slack players to negative-slack
players.  Both lose a controlled amount of welfare.
"""

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet
from .core import frobenius_welfare, uar_allocation
from .opt import solve_Y

LEMMA_TOL = 1e-8


@dataclass
class SlackProfile:
    """Per-player proportionality slack S_i = Y_i . mu_i - 1/n."""

    s: np.ndarray


def slack_profile(Y: np.ndarray, mu: np.ndarray) -> SlackProfile:
    n = Y.shape[0]
    return SlackProfile(s=(Y * mu).sum(axis=1) - 1.0 / n)


def xprime_delta(Y: np.ndarray, mu: np.ndarray, gamma: float, a: float) -> np.ndarray:
    """Per-entry mass shaved off Y in the uniform-slack construction:
    Delta_{ik} = (Y_{ik}/sum_k' Y_{ik'}) * (S_i/sum S) * (n*gamma/a).
    Rows of Y with zero sum (never feasible, handled defensively) shave 0.
    Totals n*gamma/a whenever every row sum is positive."""
    Y = np.asarray(Y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n = Y.shape[0]
    S = (Y * mu).sum(axis=1) - 1.0 / n
    total = S.sum()
    row_sums = Y.sum(axis=1)
    delta = np.zeros_like(Y)
    nonzero = row_sums > 0
    delta[nonzero] = (Y[nonzero] / row_sums[nonzero, None]) \
        * (S[nonzero, None] / total) * (n * gamma / a)
    return delta


def construct_xprime(Y: np.ndarray, mu: np.ndarray, gamma: float,
                     a: float, b: float) -> np.ndarray:
    """Allocation with uniform proportionality slack >= gamma, at welfare
    cost at most b*n*gamma/a relative to Y.

    Case 1 (total slack <= (b/a)*n*gamma): UAR.  Case 2: shave
    Delta_{ik} proportional to Y's row profile and slack share, then
    return the shaved mass uniformly within each column.
    """
    Y = np.asarray(Y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n, m = Y.shape
    if not gamma < a / (b * n):
        raise ValueError(f"gamma must be below a/(b*n) = {a / (b * n)!r}, got {gamma!r}")
    S = (Y * mu).sum(axis=1) - 1.0 / n
    if S.sum() <= (b / a) * n * gamma:
        return uar_allocation(n, m)
    delta = xprime_delta(Y, mu, gamma, a)
    return Y - delta + delta.sum(axis=0, keepdims=True) / n


def verify_slack_construction(Y: np.ndarray, mu: np.ndarray, gamma: float,
                              a: float, b: float, tol: float = LEMMA_TOL,
                              xprime: np.ndarray = None) -> dict:
    """Check the construction's guarantees clause by clause.  Passing
    `xprime` checks that matrix instead of the freshly built one (used by
    negative fixtures)."""
    Y = np.asarray(Y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n, m = Y.shape
    Xp = construct_xprime(Y, mu, gamma, a, b) if xprime is None else np.asarray(xprime, dtype=float)
    is_uar = np.allclose(Xp, 1.0 / n, atol=1e-12)
    welfare_loss = frobenius_welfare(Y, mu) - frobenius_welfare(Xp, mu)
    report = {
        "is_uar": is_uar,
        "welfare_loss": welfare_loss,
        "welfare_ok": welfare_loss <= b * n * gamma / a + tol,
        "column_sums_ok": bool(np.max(np.abs(Xp.sum(axis=0) - 1.0)) <= 1e-9),
    }
    if not is_uar:
        slacks = (Xp * mu).sum(axis=1) - 1.0 / n
        report["slack_ok"] = bool(np.all(slacks >= gamma - tol))
        report["deviation_ok"] = bool(np.max(np.abs(Xp - Y)) <= n * gamma / a + tol)
        report["min_slack"] = float(slacks.min())
        report["max_deviation"] = float(np.max(np.abs(Xp - Y)))
    report["passed"] = all(v for k, v in report.items()
                           if k.endswith("_ok"))
    return report


def construct_w(Z: np.ndarray, mu: np.ndarray, eps: float,
                a: float, b: float) -> np.ndarray:
    """Repair a solution of the eps-relaxed proportionality LP into an
    exactly proportional allocation losing at most (b*n/a)*eps welfare.

    Donors (slack >= 0) give away allocation scaled by b/a times the
    negative-to-positive slack ratio; receivers gain a mixture of the
    donors' row profiles sized to close their deficit exactly.
    """
    Z = np.asarray(Z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n, m = Z.shape
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    values = (Z * mu).sum(axis=1)
    slack = values - 1.0 / n
    if np.any(slack < -eps - 1e-9):
        raise ValueError(
            f"Z infeasible for the relaxed LP: min slack {slack.min()!r} < -eps"
        )
    pos = slack >= 0
    neg = ~pos
    possum = slack[pos].sum()
    negsum = (-slack[neg]).sum()
    if (a / b) * possum <= negsum:
        return uar_allocation(n, m)
    W = Z.copy()
    # donor rows scaled by their value so transfers preserve column sums
    donor_profiles = Z[pos] / values[pos, None]              # rows Z_i / (Z_i . mu_i)
    donor_weights = slack[pos]
    W[pos] -= (b / a) * (negsum / possum) * donor_weights[:, None] * donor_profiles
    if np.any(neg):
        pooled = (donor_weights[:, None] * donor_profiles).sum(axis=0) / possum
        W[neg] += (b / a) * (-slack[neg])[:, None] * pooled[None, :]
    return W


def verify_w_construction(Z: np.ndarray, mu: np.ndarray, eps: float,
                          a: float, b: float, tol: float = LEMMA_TOL) -> dict:
    Z = np.asarray(Z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n = Z.shape[0]
    W = construct_w(Z, mu, eps, a, b)
    slacks = (W * mu).sum(axis=1) - 1.0 / n
    loss = frobenius_welfare(Z, mu) - frobenius_welfare(W, mu)
    report = {
        "proportional_ok": bool(np.all(slacks >= -1e-9)),
        "welfare_loss": float(loss),
        "welfare_ok": loss <= (b * n / a) * eps + tol,
        "column_sums_ok": bool(np.max(np.abs(W.sum(axis=0) - 1.0)) <= 1e-9),
    }
    report["passed"] = all(v for k, v in report.items() if k.endswith("_ok"))
    return report


def verify_continuity(mu1: np.ndarray, mu2: np.ndarray, cs: ConstraintSet,
                      tol: float = LEMMA_TOL) -> dict:
    """Check |<Y^mu, mu> - <Y^mu', mu'>| <= C_P3 * ||mu - mu'||_1."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    l1 = float(np.abs(mu1 - mu2).sum())
    w1 = frobenius_welfare(solve_Y(mu1, cs), mu1)
    w2 = frobenius_welfare(solve_Y(mu2, cs), mu2)
    bound = cs.c_p3 * l1 + tol
    return {
        "welfare_1": w1,
        "welfare_2": w2,
        "abs_diff": abs(w1 - w2),
        "l1": l1,
        "bound": bound,
        "passed": abs(w1 - w2) <= bound,
    }
