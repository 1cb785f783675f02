"""Value matrices, fractional allocations, and instance descriptions.

Value matrices and allocations are plain (n, m) float arrays.  A value
matrix mu holds one mean value per (player, item type); a true-mean
matrix has entries in [a, b] and rows summing to 1.  An allocation X is
column-stochastic: column k gives the probability each player receives
an arriving item of type k.
"""

from dataclasses import dataclass

import numpy as np

COLUMN_TOL = 1e-9
ROW_SUM_TOL = 1e-12

PROPORTIONALITY = "proportionality"
ENVY_FREENESS = "envy_freeness"
CONSTRAINT_KINDS = (PROPORTIONALITY, ENVY_FREENESS)


def uar_allocation(n: int, m: int) -> np.ndarray:
    """Uniform-at-random allocation: every entry 1/n."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return np.full((n, m), 1.0 / n)


def frobenius_welfare(X: np.ndarray, mu: np.ndarray) -> float:
    """Frobenius product <X, mu>: total expected welfare per arriving item
    (up to the constant 1/m factor, omitted consistently)."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if X.shape != mu.shape:
        raise ValueError(f"shape mismatch: X {X.shape} vs mu {mu.shape}")
    return float((X * mu).sum())


def is_valid_allocation(X: np.ndarray, tol: float = COLUMN_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
        return False
    return bool(np.max(np.abs(X.sum(axis=0) - 1.0)) <= tol)


def assert_valid_allocation(X: np.ndarray, tol: float = COLUMN_TOL, what: str = "allocation") -> None:
    X = np.asarray(X, dtype=float)
    col = np.max(np.abs(X.sum(axis=0) - 1.0))
    if col > tol:
        raise ValueError(f"{what}: column sums off by {col:.3e}")
    if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
        raise ValueError(f"{what}: entries outside [0, 1]")


def renormalize_columns(X: np.ndarray) -> np.ndarray:
    """Exact column renormalization; cleans up simplex rounding noise."""
    X = np.clip(np.asarray(X, dtype=float), 0.0, 1.0)
    return X / X.sum(axis=0, keepdims=True)


@dataclass
class InstanceSpec:
    """One problem instance: dimensions, horizon, value bounds, true means."""

    n: int
    m: int
    T: int
    a: float
    b: float
    mu_star: np.ndarray
    noise_sigma: float = 0.0
    seed: int = 0
    constraint_kind: str = PROPORTIONALITY


def validate(spec: InstanceSpec) -> list:
    """Return a list of violated-invariant descriptions (empty when ok)."""
    violations = []
    if spec.T < 1:
        violations.append(f"T must be >= 1, got {spec.T}")
    if not (0 < spec.a <= spec.b):
        violations.append(f"need 0 < a <= b, got a={spec.a}, b={spec.b}")
    if spec.noise_sigma < 0:
        violations.append(f"noise_sigma must be nonnegative, got {spec.noise_sigma}")
    if spec.constraint_kind not in CONSTRAINT_KINDS:
        violations.append(f"unknown constraint_kind {spec.constraint_kind!r}")
    mu = np.asarray(spec.mu_star, dtype=float)
    if mu.shape != (spec.n, spec.m):
        violations.append(f"mu_star shape {mu.shape} != ({spec.n}, {spec.m})")
        return violations
    for i in range(spec.n):
        row_sum = mu[i].sum()
        if abs(row_sum - 1.0) > ROW_SUM_TOL:
            violations.append(f"row {i} sums to {row_sum!r}, expected 1")
        for k in range(spec.m):
            if not (spec.a - 1e-12 <= mu[i, k] <= spec.b + 1e-12):
                violations.append(
                    f"entry ({i}, {k}) = {mu[i, k]!r} outside [{spec.a}, {spec.b}]"
                )
    return violations


def random_normalized_matrix(n: int, m: int, a: float, b: float, seed: int,
                             max_tries: int = 100000) -> np.ndarray:
    """Row-normalized matrix with entries in [a, b]: symmetric Dirichlet
    rows, rejected until they land inside the bounds."""
    if a * m > 1 or b * m < 1:
        raise ValueError(f"no normalized row fits in [{a}, {b}] with m={m}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    rows = []
    tries = 0
    while len(rows) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("rejection sampling did not converge; widen [a, b]")
        row = rng.dirichlet(np.full(m, 3.0))
        if np.all(row >= a) and np.all(row <= b):
            rows.append(row)
    return np.array(rows)
