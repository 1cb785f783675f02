import numpy as np
import pytest

from fairbandit import constraints, core, lowerbound, opt, sim


def test_instance_entries():
    pair = lowerbound.lb_instances(1000)
    assert pair.mu1[0, 1] == pytest.approx(21.0 / 42.0)
    assert pair.mu1[2, 2] == pytest.approx(40.0 / 42.0)
    assert pair.epsilon == pytest.approx(0.1)
    diff = pair.mu2 - pair.mu1
    expected = np.zeros((3, 3))
    expected[1, 1] = pair.epsilon
    expected[1, 2] = -pair.epsilon
    assert np.allclose(diff, expected, atol=1e-15)


def test_instance_t_too_small():
    with pytest.raises(ValueError, match="at least 8"):
        lowerbound.lb_instances(7)


def test_instances_validate_at_safe_horizon():
    T = lowerbound.LB_T_BOUNDS_OK
    pair = lowerbound.lb_instances(T)
    for mu in (pair.mu1, pair.mu2):
        spec = core.InstanceSpec(n=3, m=3, T=T, a=lowerbound.LB_A, b=lowerbound.LB_B,
                                 mu_star=mu, constraint_kind="envy_freeness")
        assert core.validate(spec) == []


def test_ef_optimum_matches_solver():
    pair = lowerbound.lb_instances(lowerbound.LB_T_BOUNDS_OK)
    cs = constraints.envy_freeness(3, 3, lowerbound.LB_A, lowerbound.LB_B)
    Y = opt.solve_Y(pair.mu1, cs)
    assert np.max(np.abs(Y - lowerbound.ef_optimal_mu1())) <= 1e-8
    assert core.frobenius_welfare(Y, pair.mu1) == pytest.approx(80.0 / 42.0, abs=1e-8)
    assert constraints.evaluate(lowerbound.ef_optimal_mu1(), pair.mu1, cs).min() >= -1e-12


def test_decomposition_at_optimum():
    lhs, rhs, ok = lowerbound.regret_decomposition_check(lowerbound.ef_optimal_mu1())
    assert ok
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(0.0, abs=1e-12)


def test_decomposition_at_uar():
    lhs, rhs, ok = lowerbound.regret_decomposition_check(core.uar_allocation(3, 3))
    assert ok
    assert lhs == pytest.approx(38.0 / 42.0, abs=1e-12)
    assert rhs == pytest.approx(1.0 / 42.0, abs=1e-12)


def test_decomposition_rejects_non_ef_input():
    grabby = np.zeros((3, 3))
    grabby[0] = 1.0  # player 0 takes everything; others envy
    with pytest.raises(ValueError, match="envy-freeness"):
        lowerbound.regret_decomposition_check(grabby)


def test_decomposition_on_sampled_vertices():
    pair = lowerbound.lb_instances(lowerbound.LB_T_BOUNDS_OK)
    cs = constraints.envy_freeness(3, 3, lowerbound.LB_A, lowerbound.LB_B)
    rng = np.random.default_rng(55)
    for _ in range(100):
        X = opt.solve_constrained(rng.normal(0, 1, (3, 3)), pair.mu1, cs)
        _, _, ok = lowerbound.regret_decomposition_check(X)
        assert ok


def _lb_spec(mu, T, seed=0):
    return core.InstanceSpec(n=3, m=3, T=T, a=lowerbound.LB_A, b=lowerbound.LB_B,
                             mu_star=mu, noise_sigma=0.1, seed=seed,
                             constraint_kind="envy_freeness")


def test_statistic_oracle_is_zero():
    pair = lowerbound.lb_instances(3000)
    result = sim.run(_lb_spec(pair.mu1, 3000), policy_kind="oracle",
                     record_full_allocations=True)
    assert lowerbound.lb_statistic(result) <= 1e-8 * 3000
    assert result.final_regret() == pytest.approx(0.0, abs=1e-9)


def test_statistic_uar_equals_horizon():
    pair = lowerbound.lb_instances(3000)
    result = sim.run(_lb_spec(pair.mu1, 300), policy_kind="uar",
                     record_full_allocations=True)
    assert lowerbound.lb_statistic(result) == pytest.approx(300.0, abs=1e-9)


def test_statistic_empty_run():
    result = sim.run(_lb_spec(lowerbound.lb_instances(3000).mu1, 1), policy_kind="uar",
                     record_full_allocations=True)
    result.allocations = result.allocations[:0]
    assert lowerbound.lb_statistic(result) == 0.0


def test_statistic_requires_allocations():
    pair = lowerbound.lb_instances(3000)
    result = sim.run(_lb_spec(pair.mu1, 10), policy_kind="uar")
    with pytest.raises(ValueError, match="full allocations"):
        lowerbound.lb_statistic(result)
