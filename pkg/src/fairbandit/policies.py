"""Allocation policies: the two-stage UCB pipeline, uniform-at-random,
explore-then-commit, and the known-means oracle.

The UCB decision path reads only the observation history and the public
instance scalars (n, m, T, a, b); true means never enter it.  Logs are
natural throughout.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConfidenceBox, ConstraintSet
from .core import InstanceSpec, uar_allocation
from .opt import (
    GridSpec,
    OptError,
    average_explorers,
    grid_for_horizon,
    grid_max_term,
    slack_budget,
    solve_explore,
    solve_robust_welfare,
    solve_Y,
)

UAR = "uar"
ORACLE = "oracle"
ETC = "etc"
UCB_FAIR = "ucb_fair"
POLICY_KINDS = (UAR, ORACLE, ETC, UCB_FAIR)


@dataclass
class History:
    """Observed (round, item type, player, value) records with per-cell
    counts and value sums kept in sync."""

    n: int
    m: int
    counts: np.ndarray = None
    value_sums: np.ndarray = None
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.n, self.m), dtype=np.int64)
        if self.value_sums is None:
            self.value_sums = np.zeros((self.n, self.m))

    def append(self, t: int, k: int, i: int, v: float) -> None:
        self.records.append((t, k, i, v))
        self.counts[i, k] += 1
        self.value_sums[i, k] += v

    @classmethod
    def from_counts(cls, counts: np.ndarray, value_sums: np.ndarray) -> "History":
        """Synthetic history for scripted tests; the record list stays empty."""
        counts = np.asarray(counts, dtype=np.int64)
        return cls(n=counts.shape[0], m=counts.shape[1],
                   counts=counts.copy(), value_sums=np.asarray(value_sums, dtype=float).copy())


def confidence_radii(history: History, n: int, m: int, T: int) -> np.ndarray:
    """eps_{ik} = sqrt(ln^2(6nmT) / N_{ik}); +inf where N_{ik} = 0."""
    if T < 1:
        raise ValueError("T must be >= 1")
    width = math.log(6.0 * n * m * T) ** 2
    return np.where(history.counts > 0,
                    np.sqrt(width / np.maximum(history.counts, 1)),
                    np.inf)


def empirical_means(history: History, n: int, m: int, a: float, b: float) -> np.ndarray:
    """Per-cell empirical means; unsampled cells take the (a+b)/2 placeholder
    (inert, because their radius sentinel widens the box to [a, b])."""
    counts = history.counts
    return np.where(counts > 0,
                    history.value_sums / np.maximum(counts, 1),
                    (a + b) / 2.0)


def warmup_length(T: int, warmup_scale: float = 1.0) -> int:
    """min(T, ceil(ln^2(T) * sqrt(T) * warmup_scale))."""
    return min(T, math.ceil(math.log(T) ** 2 * math.sqrt(T) * warmup_scale))


def etc_explore_length(T: int, etc_scale: float = 1.0) -> int:
    return min(T, math.ceil(T ** (2.0 / 3.0) * etc_scale))


def _upper_estimates(mu_hat: np.ndarray, eps: np.ndarray, b: float, clamp: bool) -> np.ndarray:
    mu_U = mu_hat + eps
    if np.any(~np.isfinite(eps)):
        if not clamp:
            raise OptError("unsampled cell with clamping disabled: mu_U undefined")
        mu_U = np.where(np.isfinite(eps), mu_U, b)
    return mu_U


def ucb_fair_allocate(t: int, history: History, spec: InstanceSpec, cs: ConstraintSet,
                      grid: GridSpec, warmup_scale: float = 1.0, clamp: bool = True):
    """One round of the two-stage UCB pipeline.

    Warm-up rounds return UAR.  Afterwards: empirical means and radii
    define the (clamped) box; the robust LP picks the optimistic welfare
    allocation Xhat; the grid term and Xhat set the welfare floor; one
    exploration LP per (player, item type) maximizes that cell; the round
    allocation is their average.  Returns (allocation, diagnostics).
    """
    n, m, T, a, b = spec.n, spec.m, spec.T, spec.a, spec.b
    if t < warmup_length(T, warmup_scale):
        return uar_allocation(n, m), {"phase": "warmup"}
    if n == 1:
        # the only valid allocation hands everything to the single player;
        # the robust LP is skipped (its worst corner is never normalized)
        return np.ones((1, m)), {"phase": "ucb"}

    mu_hat = empirical_means(history, n, m, a, b)
    eps = confidence_radii(history, n, m, T)
    box = ConfidenceBox(mu_hat, eps,
                        clamp_lo=a if clamp else None,
                        clamp_hi=b if clamp else None)
    mu_U = _upper_estimates(mu_hat, eps, b, clamp)
    try:
        Xhat = solve_robust_welfare(box, cs, mu_U)
        gridmax = grid_max_term(box, cs, eps, grid)
        budget = slack_budget(Xhat, mu_U, eps, gridmax, cs)
        Zs = [solve_explore(box, cs, mu_U, (i, k), budget)
              for i in range(n) for k in range(m)]
    except OptError as err:
        raise OptError(f"round {t}: {err}") from err
    X = average_explorers(Zs)
    lo, hi = box.effective_bounds()
    diag = {
        "phase": "ucb",
        "box_lo": lo,
        "box_hi": hi,
        "eps": eps,
        "mu_hat": mu_hat,
        "mu_U": mu_U,
        "Xhat": Xhat,
        "gridmax": gridmax,
        "budget": budget,
    }
    return X, diag


class UarPolicy:
    kind = UAR

    def __init__(self, spec: InstanceSpec, cs: ConstraintSet = None):
        self._X = uar_allocation(spec.n, spec.m)
        self.warmup = spec.T
        self.last_diag = {"phase": "warmup"}

    def allocate(self, t: int, history: History) -> np.ndarray:
        return self._X


class OraclePolicy:
    """Plays the constrained welfare optimum for the true means every round."""

    kind = ORACLE

    def __init__(self, spec: InstanceSpec, cs: ConstraintSet):
        self._X = solve_Y(np.asarray(spec.mu_star, dtype=float), cs)
        self.warmup = 0
        self.last_diag = {"phase": "oracle"}

    def allocate(self, t: int, history: History) -> np.ndarray:
        return self._X


class EtcPolicy:
    """UAR exploration for ceil(T^(2/3) * etc_scale) rounds, then a single
    robust welfare solve whose output is replayed for the rest of the run."""

    kind = ETC

    def __init__(self, spec: InstanceSpec, cs: ConstraintSet,
                 etc_scale: float = 1.0, clamp: bool = True):
        self.spec = spec
        self.cs = cs
        self.clamp = clamp
        self.warmup = etc_explore_length(spec.T, etc_scale)
        self._uar = uar_allocation(spec.n, spec.m)
        self._commit = None
        self.last_diag = {"phase": "warmup"}

    def allocate(self, t: int, history: History) -> np.ndarray:
        if t < self.warmup:
            self.last_diag = {"phase": "warmup"}
            return self._uar
        if self._commit is None:
            spec = self.spec
            mu_hat = empirical_means(history, spec.n, spec.m, spec.a, spec.b)
            eps = confidence_radii(history, spec.n, spec.m, spec.T)
            box = ConfidenceBox(mu_hat, eps,
                                clamp_lo=spec.a if self.clamp else None,
                                clamp_hi=spec.b if self.clamp else None)
            mu_U = _upper_estimates(mu_hat, eps, spec.b, self.clamp)
            try:
                self._commit = solve_robust_welfare(box, self.cs, mu_U)
            except OptError as err:
                raise OptError(f"round {t}: {err}") from err
            lo, hi = box.effective_bounds()
            self._diag = {"phase": "commit", "box_lo": lo, "box_hi": hi, "eps": eps}
        self.last_diag = self._diag
        return self._commit


class UcbFairPolicy:
    kind = UCB_FAIR

    def __init__(self, spec: InstanceSpec, cs: ConstraintSet, grid: GridSpec = None,
                 warmup_scale: float = 1.0, clamp: bool = True,
                 grid_cap: int = 512, grid_sample_seed: int = None):
        self.spec = spec
        self.cs = cs
        if grid is None:
            seed = spec.seed + 1000003 if grid_sample_seed is None else grid_sample_seed
            grid = grid_for_horizon(spec.T, cap=grid_cap, sample_seed=seed)
        self.grid = grid
        self.warmup_scale = warmup_scale
        self.clamp = clamp
        self.warmup = warmup_length(spec.T, warmup_scale)
        self.last_diag = {"phase": "warmup"}

    def allocate(self, t: int, history: History) -> np.ndarray:
        X, diag = ucb_fair_allocate(t, history, self.spec, self.cs, self.grid,
                                    warmup_scale=self.warmup_scale, clamp=self.clamp)
        self.last_diag = diag
        return X


def oracle_allocate(spec: InstanceSpec, cs: ConstraintSet) -> np.ndarray:
    """Y^{mu*}: constant across rounds."""
    return solve_Y(np.asarray(spec.mu_star, dtype=float), cs)


def make_policy(kind: str, spec: InstanceSpec, cs: ConstraintSet, knobs: dict = None):
    knobs = dict(knobs or {})
    if kind == UAR:
        return UarPolicy(spec, cs)
    if kind == ORACLE:
        return OraclePolicy(spec, cs)
    if kind == ETC:
        return EtcPolicy(spec, cs,
                         etc_scale=knobs.get("etc_scale", 1.0),
                         clamp=knobs.get("clamp", True))
    if kind == UCB_FAIR:
        grid = None
        if "grid_spacing" in knobs and knobs["grid_spacing"] is not None:
            grid = GridSpec(spacing=knobs["grid_spacing"],
                            cap=knobs.get("grid_cap", 512),
                            sample_seed=knobs.get("grid_sample_seed", spec.seed + 1000003))
        return UcbFairPolicy(spec, cs, grid=grid,
                             warmup_scale=knobs.get("warmup_scale", 1.0),
                             clamp=knobs.get("clamp", True),
                             grid_cap=knobs.get("grid_cap", 512),
                             grid_sample_seed=knobs.get("grid_sample_seed"))
    raise ValueError(f"unknown policy kind {kind!r}")
