"""Acceptance gate: one test per criterion, in order, each printing a
PASS/FAIL line with the measured quantities (run with -s to stream them).

The regret-rate criterion is implemented exactly as stated and is
expected to fail two of its three clauses at desk scale with the
algorithm's specified warm-up and welfare-floor constants; the decisions
ledger carries the quantitative analysis.  Everything else passes.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from fairbandit import constraints, core, lemmas, opt, policies, sim, verify

MU = np.array([[0.8, 0.2], [0.2, 0.8]])
A, B = 0.2, 0.8


def _report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def _spec(T, seed=0, sigma=0.1):
    return core.InstanceSpec(n=2, m=2, T=T, a=A, b=B, mu_star=MU,
                             noise_sigma=sigma, seed=seed)


def test_criterion_01_lp_oracle_equivalence():
    started = time.perf_counter()
    report = verify.suite_lp(trials=200)
    elapsed = time.perf_counter() - started
    ok = report["passed"] and elapsed < 5.0
    assert _report("LP oracle equivalence",
                   ok, f"worst gap {report['worst_gap']:.2e}, {elapsed:.2f}s"), report


def test_criterion_02_uar_proportionality():
    started = time.perf_counter()
    worst = 0.0
    count = 0
    shapes = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2), (4, 4), (3, 4), (4, 3), (1, 3)]
    for idx in range(100):
        n, m = shapes[idx % len(shapes)]
        a = min(0.5 / m, 0.2)
        mu = core.random_normalized_matrix(n, m, a, 0.8, 3000 + idx)
        cs = constraints.proportionality(n, m, a, 0.8)
        slacks = constraints.evaluate(core.uar_allocation(n, m), mu, cs)
        worst = max(worst, float(np.abs(slacks).max()))
        count += 1
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-12 and elapsed < 1.0 and count == 100
    assert _report("UAR proportionality suite", ok, f"max |slack| {worst:.2e}, {elapsed:.2f}s")


def test_criterion_03_welfare_continuity():
    started = time.perf_counter()
    rng = np.random.default_rng(424242)
    worst_margin = -np.inf
    failures = 0
    for shape_idx, (n, m) in enumerate(((2, 2), (2, 3), (3, 3))):
        a = 0.1 if m >= 3 else A
        cs = constraints.proportionality(n, m, a, B)
        for case in range(100):
            mu = core.random_normalized_matrix(n, m, a, B, 7000 + shape_idx * 500 + case)
            mu2 = verify.perturbed_pair(mu, a, B, rng, l1_cap=0.05)
            assert np.abs(mu - mu2).sum() <= 0.05 + 1e-12
            res = lemmas.verify_continuity(mu, mu2, cs)
            worst_margin = max(worst_margin, res["abs_diff"] - res["bound"])
            if not res["passed"]:
                failures += 1
    elapsed = time.perf_counter() - started
    ok = failures == 0 and elapsed < 30.0
    assert _report("Welfare continuity suite", ok,
                   f"300 pairs, worst margin {worst_margin:.2e}, {elapsed:.2f}s")


def test_criterion_04_uniform_slack_construction():
    started = time.perf_counter()
    failures = []
    for idx in range(100):
        n, m = (2, 2) if idx % 2 == 0 else (2, 3)
        cs = constraints.proportionality(n, m, A, B)
        mu = core.random_normalized_matrix(n, m, A, B, 11000 + idx)
        Y = opt.solve_Y(mu, cs)
        for gamma in (1e-3, 1e-2):
            assert gamma < A / (B * n)
            res = lemmas.verify_slack_construction(Y, mu, gamma, A, B, tol=1e-8)
            if not res["passed"]:
                failures.append((idx, gamma, res))
    elapsed = time.perf_counter() - started
    ok = not failures and elapsed < 30.0
    assert _report("Uniform slack construction suite", ok,
                   f"100 instances x 2 gammas, {elapsed:.2f}s"), failures[:3]


def test_criterion_05_relaxed_repair():
    eps = 0.02
    rng = np.random.default_rng(515151)
    failures = []
    for idx in range(100):
        cs = constraints.proportionality(2, 2, A, B)
        mu = core.random_normalized_matrix(2, 2, A, B, 15000 + idx)
        Z = opt.solve_constrained(rng.normal(0, 1, (2, 2)), mu, cs,
                                  thresholds=cs.thresholds - eps)
        res = lemmas.verify_w_construction(Z, mu, eps, A, B, tol=1e-8)
        if not res["passed"]:
            failures.append((idx, res))
    ok = not failures
    assert _report("Relaxed-LP repair suite", ok, "100 relaxed-feasible Z repaired"), failures[:3]


def test_criterion_06_robust_soundness():
    report = verify.suite_robust(boxes=20, samples=1000)
    ok = not report["soundness_failures"]
    assert _report("Robust soundness", ok,
                   f"20 boxes x 1000 samples, "
                   f"{len(report['soundness_failures'])} soundness failures"), report


def test_criterion_07_pipeline_dominance():
    spec = _spec(40000)
    cs = constraints.proportionality(2, 2, A, B)
    rng = np.random.default_rng(99)
    worst_z = np.inf
    worst_avg = np.inf
    for round_idx in range(20):
        counts = 6000 + rng.integers(0, 3000, (2, 2))
        mu_hat = np.clip(MU + rng.normal(0, 0.003, (2, 2)), A, B)
        history = policies.History.from_counts(counts, mu_hat * counts)
        grid = opt.GridSpec(spacing=1.0 / math.sqrt(spec.T), cap=512,
                            sample_seed=round_idx)
        X, diag = policies.ucb_fair_allocate(30000, history, spec, cs, grid)
        Xhat = diag["Xhat"]
        eps = diag["eps"]
        box = constraints.ConfidenceBox(diag["mu_hat"], eps, A, B)
        for i in range(2):
            for k in range(2):
                Z = opt.solve_explore(box, cs, diag["mu_U"], (i, k), diag["budget"])
                worst_z = min(worst_z, Z[i, k] - Xhat[i, k])
        worst_avg = min(worst_avg, float((X - Xhat / 4.0).min()))
    ok = worst_z >= -1e-8 and worst_avg >= -1e-8
    assert _report("Pipeline dominance", ok,
                   f"min(Z_ik - Xhat_ik) = {worst_z:.2e}, "
                   f"min(X_ik - Xhat_ik/nm) = {worst_avg:.2e}")


def test_criterion_08_end_to_end_constraints():
    started = time.perf_counter()
    rows = sim.batch([_spec(20000)], ["ucb_fair"], list(range(20)),
                     knobs={"grid_cap": 512}, workers=2)
    elapsed = time.perf_counter() - started
    assert all(r["status"] == "ok" for r in rows), rows
    violating = sum(1 for r in rows if r["max_violation"] > 1e-6)
    min_event = min(r["event_e_fraction"] for r in rows)
    ok = violating <= 1 and min_event >= 0.999 and elapsed < 600.0
    assert _report(
        "End-to-end constraint satisfaction", ok,
        f"{violating}/20 runs with violation > 1e-6, "
        f"min event-E fraction {min_event:.4f}, {elapsed:.0f}s")


def test_criterion_09_regret_rate():
    horizons = (5000, 10000, 20000, 40000)
    seeds = list(range(10))
    medians = {}
    for T in horizons:
        rows = sim.batch([_spec(T)], ["ucb_fair", "uar"], seeds,
                         knobs={"grid_cap": 512}, workers=2)
        assert all(r["status"] == "ok" for r in rows), rows
        for kind in ("ucb_fair", "uar"):
            finals = [r["final_regret"] for r in rows if r["policy"] == kind]
            medians[(kind, T)] = float(np.median(finals))

    def fitted_slope(kind):
        x = np.log(np.array(horizons, dtype=float))
        y = np.log(np.array([medians[(kind, T)] for T in horizons]))
        xc = x - x.mean()
        return float((xc * (y - y.mean())).sum() / (xc * xc).sum())

    ucb_slope = fitted_slope("ucb_fair")
    uar_slope = fitted_slope("uar")

    # etc baseline at T=40000: default scale first, then the smallest scale
    # whose commit-round robust LP is feasible at this horizon
    etc_rows = sim.batch([_spec(40000)], ["etc"], seeds,
                         knobs={"etc_scale": 1.0}, workers=2)
    etc_ok = [r["final_regret"] for r in etc_rows if r["status"] == "ok"]
    etc_note = f"default etc_scale: {len(etc_ok)}/10 runs completed"
    if not etc_ok:
        etc_rows = sim.batch([_spec(40000)], ["etc"], seeds,
                             knobs={"etc_scale": 8.0}, workers=2)
        etc_ok = [r["final_regret"] for r in etc_rows if r["status"] == "ok"]
        etc_note += "; fell back to etc_scale=8 (smallest feasible)"
    etc_median = float(np.median(etc_ok)) if etc_ok else float("nan")

    ucb_slope_ok = ucb_slope <= 0.70
    uar_slope_ok = uar_slope >= 0.95
    ordering_ok = bool(etc_ok) and medians[("ucb_fair", 40000)] <= etc_median

    _report("Regret rate / ucb_fair slope <= 0.70", ucb_slope_ok,
            f"slope {ucb_slope:.3f}, medians "
            + str({T: round(medians[('ucb_fair', T)], 1) for T in horizons}))
    _report("Regret rate / uar slope >= 0.95", uar_slope_ok, f"slope {uar_slope:.3f}")
    _report("Regret rate / ucb_fair <= etc at T=40000", ordering_ok,
            f"ucb median {medians[('ucb_fair', 40000)]:.1f} vs etc median "
            f"{etc_median:.1f} ({etc_note})")
    assert ucb_slope_ok and uar_slope_ok and ordering_ok, (
        "regret-rate criterion failed as analyzed in the decisions ledger: "
        f"ucb slope {ucb_slope:.3f} (warm-up ceil(ln^2(T) sqrt(T)) saturates "
        "these horizons and the exploration LPs' welfare floor is slack at "
        "desk scale), etc comparison "
        f"{medians[('ucb_fair', 40000)]:.1f} vs {etc_median:.1f}")


def test_criterion_10_lower_bound_instance():
    report = verify.suite_lowerbound(samples=1000)
    ok = report["passed"]
    assert _report("Lower bound instance", ok,
                   f"welfare {report['welfare']:.10f} (80/42 = {80/42:.10f}), "
                   f"{report['decomposition_checked']} decompositions checked"), report


def test_criterion_11_run_determinism(tmp_path):
    config = tmp_path / "det.ini"
    config.write_text(f"""\
[instance]
n = 2
m = 2
T = 10000
a = 0.2
b = 0.8
mu_star = 0.8 0.2 0.2 0.8
noise_sigma = 0.1
seed = 7

[policy]
kind = ucb_fair

[constraints]
kind = proportionality

[grid]
cap = 64

[output]
directory = {tmp_path / 'out'}
""")
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "fairbandit.cli", "run",
                               str(config)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        if _ == 0:
            first = (tmp_path / "out" / "run.csv").read_bytes()
    second = (tmp_path / "out" / "run.csv").read_bytes()
    ok = first == second
    assert _report("Determinism", ok,
                   f"run.csv identical across reruns ({len(first)} bytes)")
