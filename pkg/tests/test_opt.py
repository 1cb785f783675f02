import numpy as np
import pytest

from fairbandit import constraints, core, lp, opt

MU = np.array([[0.8, 0.2], [0.2, 0.8]])
A, B = 0.2, 0.8
CS = constraints.proportionality(2, 2, A, B)


def test_solve_y_single_player():
    cs = constraints.proportionality(1, 2, 0.3, 0.7)
    Y = opt.solve_Y(np.array([[0.7, 0.3]]), cs)
    assert np.allclose(Y, 1.0)


def test_solve_y_identity_matches_vertex_oracle():
    Y = opt.solve_Y(MU, CS)
    assert np.allclose(Y, np.eye(2), atol=1e-9)
    # brute-force oracle over the same polytope
    rows = [(-b.ravel(), -c) for b, c in zip(CS.coeff_fn(MU), CS.thresholds)]
    eqs = []
    for k in range(2):
        coeff = np.zeros(4)
        coeff[k::2] = 1.0
        eqs.append((coeff, 1.0))
    problem = lp.LinearProgram(MU.ravel(), eq_constraints=eqs, ub_constraints=rows,
                               var_bounds=[(0.0, 1.0)] * 4)
    best = max(MU.ravel() @ v for v in lp.enumerate_vertices(problem))
    assert core.frobenius_welfare(Y, MU) == pytest.approx(best, abs=1e-8)
    assert best == pytest.approx(1.6, abs=1e-9)


def test_robust_degenerate_box_equals_solve_y():
    box = constraints.ConfidenceBox(MU, np.zeros((2, 2)))
    X = opt.solve_robust_welfare(box, CS, MU)
    assert np.allclose(X, opt.solve_Y(MU, CS), atol=1e-12)


def test_robust_small_radius_keeps_identity():
    box = constraints.ConfidenceBox(MU, np.full((2, 2), 0.05))
    X = opt.solve_robust_welfare(box, CS, MU + 0.05)
    assert np.allclose(X, np.eye(2), atol=1e-9)


def test_robust_symmetric_center_degenerate_box():
    mu = np.full((2, 2), 0.5)
    box = constraints.ConfidenceBox(mu, np.zeros((2, 2)))
    X1 = opt.solve_robust_welfare(box, CS, mu)
    X2 = opt.solve_robust_welfare(box, CS, mu)
    assert np.array_equal(X1, X2)
    assert np.allclose(X1.sum(axis=0), 1.0, atol=1e-9)
    assert constraints.evaluate(X1, mu, CS).min() >= -1e-9
    # any positive radius around the symmetric center leaves no valid
    # allocation meeting the worst-corner constraints
    wide = constraints.ConfidenceBox(mu, np.full((2, 2), 0.1), A, B)
    with pytest.raises(opt.OptError):
        opt.solve_robust_welfare(wide, CS, mu + 0.1)


def test_grid_points_examples():
    g = opt.GridSpec(spacing=0.1)
    box = constraints.ConfidenceBox(np.array([[0.515]]), np.array([[0.095]]))
    pts = opt.grid_points(box, g)
    assert sorted(float(p) for p in np.ravel(pts)) == pytest.approx([0.5, 0.6])

    box = constraints.ConfidenceBox(np.array([[0.45]]), np.array([[0.01]]))
    pts = opt.grid_points(box, g)
    assert len(pts) == 1 and float(pts[0][0, 0]) == pytest.approx(0.45)

    box = constraints.ConfidenceBox(np.full((2, 2), 0.475), np.full((2, 2), 0.075))
    pts = opt.grid_points(box, opt.GridSpec(spacing=0.1, cap=100))
    assert len(pts) == 16


def test_grid_subsampling_is_deterministic_and_capped():
    box = constraints.ConfidenceBox(MU, np.full((2, 2), 0.2), A, B)
    g = opt.GridSpec(spacing=0.01, cap=64, sample_seed=11)
    pts1 = opt.grid_points(box, g)
    pts2 = opt.grid_points(box, g)
    assert len(pts1) == 64
    assert all(np.array_equal(p, q) for p, q in zip(pts1, pts2))
    keys = {p.tobytes() for p in pts1}
    assert len(keys) == 64
    lo, hi = box.effective_bounds()
    for p in pts1:
        assert np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12)
        assert np.allclose(np.round(p / 0.01) * 0.01, p, atol=1e-9)


def test_grid_max_term_examples():
    g = opt.GridSpec(spacing=1.0 / np.sqrt(400))
    box = constraints.ConfidenceBox(MU, np.zeros((2, 2)))
    assert opt.grid_max_term(box, CS, np.zeros((2, 2)), g) == pytest.approx(0.0, abs=1e-12)
    eps = np.full((2, 2), 0.1)
    # single grid point at mu: <Y^mu, eps> with Y = identity
    assert opt.grid_max_term(box, CS, eps, g) == pytest.approx(0.2, abs=1e-9)


def test_grid_max_term_matches_per_point_path():
    box = constraints.ConfidenceBox(MU, np.full((2, 2), 0.06), A, B)
    g = opt.GridSpec(spacing=0.04, cap=10000)
    eps = np.array([[0.05, 0.1], [0.15, 0.2]])
    fast = opt.grid_max_term(box, CS, eps, g)
    slow = max(core.frobenius_welfare(opt.solve_Y(mu, CS), eps)
               for mu in opt.grid_points(box, g))
    assert fast == pytest.approx(slow, abs=1e-12)


def test_grid_max_term_monotone_in_eps():
    box = constraints.ConfidenceBox(MU, np.full((2, 2), 0.06), A, B)
    g = opt.GridSpec(spacing=0.04, cap=10000)
    rng = np.random.default_rng(8)
    base = rng.uniform(0.01, 0.1, (2, 2))
    lowv = opt.grid_max_term(box, CS, base, g)
    highv = opt.grid_max_term(box, CS, base + rng.uniform(0, 0.05, (2, 2)), g)
    assert highv >= lowv - 1e-12


def test_slack_budget_formula():
    Xhat = np.eye(2)
    mu_U = np.array([[0.85, 0.25], [0.25, 0.85]])
    eps = np.full((2, 2), 0.01)
    value = opt.slack_budget(Xhat, mu_U, eps, 0.01, CS)
    # <Xhat, mu_U> = 1.7, 4*K*C_P2*gridmax = 4*8*0.01 = 0.32, 2<Xhat,eps> = 0.04
    assert value == pytest.approx(1.7 - 0.32 - 0.04 - 1e-9, abs=1e-12)
    assert opt.slack_budget(Xhat, mu_U, np.zeros((2, 2)), 0.0, CS) == \
        pytest.approx(1.7 - 1e-9, abs=1e-12)
    zero = np.zeros((2, 2))
    assert opt.slack_budget(zero, zero, zero, 0.0, CS) == pytest.approx(-1e-9, abs=1e-15)
    assert opt.slack_budget(Xhat, mu_U, eps, np.inf, CS) == -np.inf


def test_solve_explore_single_player():
    cs = constraints.proportionality(1, 2, 0.3, 0.7)
    box = constraints.ConfidenceBox(np.array([[0.6, 0.4]]), np.zeros((1, 2)))
    Z = opt.solve_explore(box, cs, np.array([[0.6, 0.4]]), (0, 1), -np.inf)
    assert np.allclose(Z, 1.0)


def test_solve_explore_minus_inf_budget_symmetric():
    mu = np.full((2, 2), 0.5)
    box = constraints.ConfidenceBox(mu, np.zeros((2, 2)))
    Z = opt.solve_explore(box, CS, mu, (0, 0), -np.inf)
    assert Z[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert constraints.evaluate(Z, mu, CS).min() >= -1e-9


def test_solve_explore_dominance_and_budget():
    box = constraints.ConfidenceBox(MU, np.full((2, 2), 0.05), A, B)
    mu_U = MU + 0.05
    eps = np.full((2, 2), 0.05)
    Xhat = opt.solve_robust_welfare(box, CS, mu_U)
    gridmax = opt.grid_max_term(box, CS, eps, opt.GridSpec(spacing=0.02, cap=4096))
    budget = opt.slack_budget(Xhat, mu_U, eps, gridmax, CS)
    Zs = []
    for i in range(2):
        for k in range(2):
            Z = opt.solve_explore(box, CS, mu_U, (i, k), budget)
            assert Z[i, k] >= Xhat[i, k] - 1e-8
            assert core.frobenius_welfare(Z, mu_U) >= budget - 1e-9
            worst = constraints.robust_coefficients(CS, box)
            slacks = np.einsum("lik,ik->l", worst, Z) - CS.thresholds
            assert slacks.min() >= -1e-9
            Zs.append(Z)
    X = opt.average_explorers(Zs)
    assert np.allclose(X.sum(axis=0), 1.0, atol=1e-9)
    for idx, (i, k) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        assert X[i, k] >= Zs[idx][i, k] / 4.0 - 1e-12


def test_explore_target_already_saturated():
    cs = constraints.proportionality(1, 2, 0.3, 0.7)
    box = constraints.ConfidenceBox(np.array([[0.6, 0.4]]), np.zeros((1, 2)))
    Z = opt.solve_explore(box, cs, np.array([[0.6, 0.4]]), (0, 0), -np.inf)
    assert Z[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_average_explorers_basics():
    X = core.uar_allocation(2, 2)
    assert np.allclose(opt.average_explorers([X, X, X]), X)
    single = np.array([[1.0], [0.0]])
    assert np.allclose(opt.average_explorers([single]), single)
    one = np.array([[0.3], [0.7]])
    two = np.array([[0.9], [0.1]])
    avg = opt.average_explorers([one, two])
    assert np.allclose(avg.sum(axis=0), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        opt.average_explorers([])
    with pytest.raises(ValueError):
        opt.average_explorers([one, np.ones((3, 1))])


def test_gridspec_validation():
    with pytest.raises(ValueError):
        opt.GridSpec(spacing=0.0)
    with pytest.raises(ValueError):
        opt.GridSpec(spacing=0.1, cap=0)
