"""Property suites behind `fairbandit verify` and the acceptance tests.

Every suite runs from a fixed internal seed and returns a JSON-friendly
report with a top-level "passed" flag.
"""

import numpy as np

from . import lp
from .constraints import (
    ConfidenceBox,
    envy_freeness,
    evaluate,
    proportionality,
    robust_coefficients,
)
from .core import frobenius_welfare, random_normalized_matrix, uar_allocation
from .lemmas import verify_continuity, verify_slack_construction, verify_w_construction
from .lowerbound import (
    LB_A,
    LB_B,
    LB_T_BOUNDS_OK,
    ef_optimal_mu1,
    lb_instances,
    regret_decomposition_check,
)
from .opt import solve_constrained, solve_robust_welfare, solve_Y

SUITES = ("lp", "lemmas", "robust", "lowerbound")


def random_lp(rng: np.random.Generator) -> lp.LinearProgram:
    """Bounded, feasible-by-construction LP with <= 4 vars, <= 6 rows."""
    n = int(rng.integers(2, 5))
    x0 = rng.uniform(0, 1, n)
    ub = []
    for _ in range(int(rng.integers(1, 7))):
        coeff = rng.normal(0, 1, n)
        ub.append((coeff, float(coeff @ x0 + rng.uniform(0, 1))))
    eqs = []
    if rng.random() < 0.3:
        coeff = rng.normal(0, 1, n)
        eqs.append((coeff, float(coeff @ x0)))
    bounds = [(0.0, float(rng.uniform(1.0, 3.0))) for _ in range(n)]
    return lp.LinearProgram(rng.normal(0, 1, n), eq_constraints=eqs,
                            ub_constraints=ub, var_bounds=bounds)


def suite_lp(trials: int = 200, seed: int = 20240) -> dict:
    """Simplex objective vs brute-force vertex enumeration on random LPs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = []
    for trial in range(trials):
        problem = random_lp(rng)
        sol = lp.solve(problem)
        vertices = lp.enumerate_vertices(problem)
        if sol.status != lp.OPTIMAL or not vertices:
            failures.append({"trial": trial, "status": sol.status,
                             "n_vertices": len(vertices)})
            continue
        vmax = max(float(problem.objective @ v) for v in vertices)
        gap = abs(sol.objective_value - vmax)
        worst = max(worst, gap)
        if gap > 1e-8:
            failures.append({"trial": trial, "gap": gap})
    return {"suite": "lp", "trials": trials, "worst_gap": worst,
            "failures": failures, "passed": not failures}


def perturbed_pair(mu: np.ndarray, a: float, b: float, rng: np.random.Generator,
                   l1_cap: float = 0.05):
    """Second matrix moving mass between two entries of one row, keeping
    rows normalized and entries inside [a, b]."""
    n, m = mu.shape
    mu2 = mu.copy()
    i = int(rng.integers(0, n))
    k1, k2 = rng.choice(m, size=2, replace=False)
    room = min(b - mu2[i, k1], mu2[i, k2] - a, l1_cap / 2)
    delta = float(rng.uniform(0, max(room, 0)))
    mu2[i, k1] += delta
    mu2[i, k2] -= delta
    return mu2


def suite_lemmas(per_case: int = 100, seed: int = 20241) -> dict:
    """Welfare continuity, uniform-slack construction, and relaxed-LP
    repair suites."""
    rng = np.random.default_rng(seed)
    a, b = 0.2, 0.8
    report = {"suite": "lemmas"}

    continuity_fail = []
    for shape_idx, (n, m) in enumerate(((2, 2), (2, 3), (3, 3))):
        aa = 0.1 if m >= 3 else a
        bb = 0.8
        cs = proportionality(n, m, aa, bb)
        for case in range(per_case):
            mu = random_normalized_matrix(n, m, aa, bb, seed * 7 + shape_idx * 1000 + case)
            mu2 = perturbed_pair(mu, aa, bb, rng)
            res = verify_continuity(mu, mu2, cs)
            if not res["passed"]:
                continuity_fail.append({"shape": (n, m), "case": case, **res})
    report["continuity_failures"] = continuity_fail

    slack_fail = []
    n, m = 2, 2
    cs = proportionality(n, m, a, b)
    for case in range(per_case):
        mu = random_normalized_matrix(n, m, a, b, seed * 13 + case)
        Y = solve_Y(mu, cs)
        for gamma in (1e-3, 1e-2):
            if not gamma < a / (b * n):
                continue
            res = verify_slack_construction(Y, mu, gamma, a, b)
            if not res["passed"]:
                slack_fail.append({"case": case, "gamma": gamma, **res})
    report["slack_failures"] = slack_fail

    repair_fail = []
    eps = 0.02
    for case in range(per_case):
        mu = random_normalized_matrix(n, m, a, b, seed * 17 + case)
        cs = proportionality(n, m, a, b)
        objective = rng.normal(0, 1, (n, m))
        Z = solve_constrained(objective, mu, cs, thresholds=cs.thresholds - eps)
        res = verify_w_construction(Z, mu, eps, a, b)
        if not res["passed"]:
            repair_fail.append({"case": case, **res})
    report["repair_failures"] = repair_fail

    report["passed"] = not (continuity_fail or slack_fail or repair_fail)
    return report


def contrast_instance(n: int, m: int, a: float, b: float, seed: int) -> np.ndarray:
    """Normalized matrix where player i's signature column i (mod m) gets
    the largest feasible weight; robust LPs stay feasible at small radii."""
    mu = random_normalized_matrix(n, m, a, b, seed)
    out = np.empty_like(mu)
    for i in range(n):
        row = np.sort(mu[i])[::-1]
        order = [i % m] + [k for k in range(m) if k != i % m]
        out[i, order] = row
    return out


def suite_robust(boxes: int = 20, samples: int = 1000, seed: int = 20242) -> dict:
    """Robust soundness: the robust optimum satisfies the constraints for
    every sampled box point.  Tightness is checked for proportionality,
    whose worst corner is attained by an actual box element."""
    rng = np.random.default_rng(seed)
    a, b = 0.2, 0.8
    sound_fail = []
    tight_fail = []
    for bi in range(boxes):
        n = int(rng.integers(2, 4))
        m = 2
        cs = proportionality(n, m, a, b)
        center = contrast_instance(n, m, a, b, seed * 31 + bi)
        radius = np.full((n, m), float(rng.uniform(0.01, 0.05)))
        box = ConfidenceBox(center, radius, clamp_lo=a, clamp_hi=b)
        mu_U = center + radius
        X = solve_robust_welfare(box, cs, mu_U)
        lo, hi = box.effective_bounds()
        mus = rng.uniform(lo, hi, size=(samples, n, m))
        worst_slack = np.inf
        for mu in mus:
            worst_slack = min(worst_slack, float(evaluate(X, mu, cs).min()))
        if worst_slack < -1e-9:
            sound_fail.append({"box": bi, "min_slack": worst_slack})
        worst = robust_coefficients(cs, box)
        for l in range(cs.L):
            lhs = float((cs.coeff_fn(lo)[l] * X).sum())
            rhs = float((worst[l] * X).sum())
            if lhs > rhs + 1e-9:
                tight_fail.append({"box": bi, "l": l, "lhs": lhs, "rhs": rhs})
    return {"suite": "robust", "boxes": boxes, "samples": samples,
            "soundness_failures": sound_fail, "tightness_failures": tight_fail,
            "passed": not (sound_fail or tight_fail)}


def suite_lowerbound(samples: int = 1000, seed: int = 20243) -> dict:
    """Hard-instance checks: EF optimum matches the permutation matrix,
    its welfare is 80/42, and the regret decomposition holds on sampled
    EF-feasible allocations."""
    pair = lb_instances(LB_T_BOUNDS_OK)
    cs = envy_freeness(3, 3, LB_A, LB_B)
    Y = solve_Y(pair.mu1, cs)
    match = bool(np.max(np.abs(Y - ef_optimal_mu1())) <= 1e-8)
    welfare = frobenius_welfare(Y, pair.mu1)
    welfare_ok = abs(welfare - 80.0 / 42.0) <= 1e-8

    rng = np.random.default_rng(seed)
    decomp_failures = []
    checked = 0
    for s in range(samples):
        objective = rng.normal(0, 1, (3, 3))
        X = solve_constrained(objective, pair.mu1, cs)
        lhs, rhs, ok = regret_decomposition_check(X)
        checked += 1
        if not ok:
            decomp_failures.append({"sample": s, "lhs": lhs, "rhs": rhs})
    uar_lhs, uar_rhs, uar_ok = regret_decomposition_check(uar_allocation(3, 3))
    return {
        "suite": "lowerbound",
        "optimum_matches_permutation": match,
        "welfare": welfare,
        "welfare_ok": welfare_ok,
        "decomposition_checked": checked,
        "decomposition_failures": decomp_failures,
        "uar_point": {"lhs": uar_lhs, "rhs": uar_rhs, "ok": uar_ok},
        "passed": match and welfare_ok and not decomp_failures and uar_ok,
    }


def run_suite(name: str) -> dict:
    if name == "lp":
        return suite_lp()
    if name == "lemmas":
        return suite_lemmas()
    if name == "robust":
        return suite_robust()
    if name == "lowerbound":
        return suite_lowerbound()
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
