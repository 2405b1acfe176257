import math
from fractions import Fraction

import numpy as np
import pytest

from advicecheck import (
    CorrelatedStrategy,
    InfeasiblePlanError,
    InvalidInputError,
    Outcome,
    ZeroCellObserved,
    estimate_psi,
    manual_plan,
    pearson_statistic,
    plan_test,
    prob_zero_cell_bound,
    run_sampling_decision,
    sensitivity_delta,
    zeta_cells,
)
from advicecheck import verifier

ACCEPT_COUNTS = [96, 601, 224, 1179]
REJECT_COUNTS = [1050, 350, 525, 175]


def test_pearson_statistic_worked_values(ce_strategy, non_ce_strategy):
    t1 = pearson_statistic(ACCEPT_COUNTS, ce_strategy, 2100)
    assert t1 == pytest.approx(4.6997, abs=0.05)
    t2 = pearson_statistic(REJECT_COUNTS, non_ce_strategy, 2100)
    assert t2 == pytest.approx(5145.0, abs=0.5)


def test_pearson_statistic_zero_when_exact(ce_strategy):
    counts = np.round(1800 * ce_strategy.probs).astype(int)  # 1800/18 integral
    assert counts.sum() == 1800
    assert pearson_statistic(counts, ce_strategy, 1800) == 0.0


def test_pearson_statistic_nonnegative_and_zero_iff_match(ce_strategy):
    rng = np.random.default_rng(0)
    for _ in range(20):
        counts = rng.multinomial(1800, ce_strategy.probs)
        t = pearson_statistic(counts, ce_strategy, 1800)
        assert t >= 0.0
        expected = np.round(1800 * ce_strategy.probs).astype(int)
        if not np.array_equal(counts, expected):
            assert t > 0.0


def test_pearson_statistic_validates_total(ce_strategy):
    with pytest.raises(InvalidInputError):
        pearson_statistic([1, 2, 3, 4], ce_strategy, 9)


def test_pearson_statistic_zero_cell_signal():
    sigma = CorrelatedStrategy([0.0, 0.5, 0.25, 0.25])
    with pytest.raises(ZeroCellObserved) as err:
        pearson_statistic([1, 50, 25, 24], sigma, 100)
    assert err.value.cells == (0,)
    # all mass off the zero cell computes normally
    assert pearson_statistic([0, 50, 25, 25], sigma, 100) == pytest.approx(0.0, abs=1e-12)


def test_pearson_statistic_permutation_invariance(ce_strategy):
    rng = np.random.default_rng(3)
    counts = rng.multinomial(2100, ce_strategy.probs)
    t = pearson_statistic(counts, ce_strategy, 2100)
    perm = [2, 0, 3, 1]
    t_perm = pearson_statistic(
        counts[perm], CorrelatedStrategy(ce_strategy.probs[perm]), 2100
    )
    assert t_perm == pytest.approx(t, rel=1e-12)


def test_sensitivity_delta_identity(ce_strategy):
    assert sensitivity_delta(ce_strategy, ce_strategy) == 0.0


def test_sensitivity_delta_exact_rational():
    announced = [Fraction(2, 18), Fraction(10, 18), Fraction(1, 18), Fraction(5, 18)]
    actual = [Fraction(1, 2), Fraction(1, 6), Fraction(1, 4), Fraction(1, 12)]
    assert sensitivity_delta(announced, actual) == Fraction(49, 20)  # exactly 2.45


def test_sensitivity_delta_positive_when_different(ce_strategy):
    other = CorrelatedStrategy([0.25, 0.25, 0.25, 0.25])
    assert sensitivity_delta(ce_strategy, other) > 0.0


def test_sensitivity_delta_excludes_zero_cells():
    announced = [Fraction(0), Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    actual = [Fraction(1, 10), Fraction(4, 10), Fraction(1, 4), Fraction(1, 4)]
    # the first cell contributes nothing despite the mismatch
    assert sensitivity_delta(announced, actual) == (Fraction(4, 10) - Fraction(1, 2)) ** 2 / Fraction(1, 2)


# analytic sublevel measures for the product announcement: deviations by one
# agent give a quadratic sensitivity along its simplex, so the measure is a
# square root; derived by hand for each single-agent subset
def _psi_exact_single(delta_hat):
    return {
        (0,): min(2 * math.sqrt(2 * delta_hat) / 3, 1.0),
        (1,): min(math.sqrt(5 * delta_hat) / 3, 1.0),
    }


def test_estimate_psi_matches_analytic(game, ce_strategy):
    est = estimate_psi(game, ce_strategy, 0.01, mc_samples=100_000, seed=5)
    exact = _psi_exact_single(0.01)
    for subset, value in exact.items():
        got = est.per_subset[subset]
        se = math.sqrt(max(value * (1 - value), 1e-9) / 100_000)
        assert abs(got - value) <= 4 * se
    assert est.psi == max(est.per_subset.values())
    assert est.psi == pytest.approx(0.094281, abs=0.005)


def test_estimate_psi_huge_threshold_saturates(game, ce_strategy):
    est = estimate_psi(game, ce_strategy, 100.0, mc_samples=2000, seed=1)
    assert est.psi == 1.0


def test_estimate_psi_monotone_in_delta_hat(game, ce_strategy):
    # shared seed makes the sublevel sets nested draw by draw
    values = [
        estimate_psi(game, ce_strategy, d, mc_samples=20_000, seed=9).psi
        for d in (0.002, 0.005, 0.01, 0.05, 0.2)
    ]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_estimate_psi_validation(game, ce_strategy):
    with pytest.raises(InvalidInputError):
        estimate_psi(game, ce_strategy, -0.1, mc_samples=2000)
    with pytest.raises(InvalidInputError):
        estimate_psi(game, ce_strategy, 0.01, mc_samples=10)


def test_prob_zero_cell_bound_worked_value(game):
    sigma = CorrelatedStrategy([0.0, 1 / 3, 1 / 3, 1 / 3])
    # min over {1}, {2}, {1,2} of {1/3*1/2, 1/3*1/2, 1*1/4} = 1/6
    assert prob_zero_cell_bound(game, sigma) == pytest.approx(1 / 6, abs=1e-12)


def test_prob_zero_cell_bound_full_support(game, ce_strategy):
    assert prob_zero_cell_bound(game, ce_strategy) == 0.0
    assert zeta_cells(ce_strategy) == ()


def test_plan_test_worked_example(game, ce_strategy):
    plan = plan_test(game, ce_strategy, p=0.1, delta_hat=0.01, mc_samples=100_000, seed=8)
    assert plan.alpha == 0.1
    assert plan.p_target == 0.1
    assert plan.critical_value == pytest.approx(6.2514, abs=0.01)
    assert plan.psi == pytest.approx(0.0943, abs=0.01)
    assert plan.beta == pytest.approx(0.0063, abs=0.001)
    assert 1900 <= plan.sample_size <= 2300
    assert plan.df_total == 3
    assert plan.zero_cells == ()
    # the budget identity holds by construction
    assert (1 - plan.psi) * plan.beta + plan.psi == pytest.approx(plan.p_target, abs=1e-9)


def test_plan_test_zero_psi_gives_beta_equal_p(game, ce_strategy, monkeypatch):
    stub = verifier.PsiEstimate(psi=0.0, std_error=0.0, per_subset={}, mc_samples=1000)
    monkeypatch.setattr(verifier, "estimate_psi", lambda *a, **k: stub)
    plan = plan_test(game, ce_strategy, p=0.1, delta_hat=0.01)
    assert plan.beta == pytest.approx(0.1, abs=1e-12)


def test_plan_test_infeasible_when_p_below_psi(game, ce_strategy):
    with pytest.raises(InfeasiblePlanError) as err:
        plan_test(game, ce_strategy, p=0.05, delta_hat=0.01, mc_samples=50_000, seed=8)
    assert err.value.psi > 0.05


def test_plans_identical_across_agents(game, ce_strategy):
    # the subset enumeration covers all agents, so every agent derives the
    # same plan from the same inputs
    a = plan_test(game, ce_strategy, p=0.1, delta_hat=0.01, mc_samples=20_000, seed=4)
    b = plan_test(game, ce_strategy, p=0.1, delta_hat=0.01, mc_samples=20_000, seed=4)
    assert a == b


def test_decision_accept_worked_example(game, ce_strategy):
    plan = manual_plan(game, ce_strategy, alpha=0.1, delta_hat=0.01, sample_size=2100)
    d = run_sampling_decision(plan, game, ce_strategy, 0, ACCEPT_COUNTS)
    assert d.outcome is Outcome.FOLLOW_MEDIATOR
    assert d.statistic == pytest.approx(4.6997, abs=0.05)
    assert d.p_value == pytest.approx(0.1952, abs=0.01)
    assert not d.rejected


def test_decision_reject_by_statistic(game, non_ce_strategy):
    plan = manual_plan(game, non_ce_strategy, alpha=0.1, delta_hat=0.01, sample_size=2100)
    d = run_sampling_decision(plan, game, non_ce_strategy, 0, REJECT_COUNTS)
    assert d.outcome is Outcome.REJECT_BY_STATISTIC
    assert d.statistic > plan.critical_value
    assert d.p_value < 1e-12


def test_decision_reject_by_incentive_screen(game, non_ce_strategy):
    plan = manual_plan(game, non_ce_strategy, alpha=0.1, delta_hat=0.01, sample_size=2100)
    d = run_sampling_decision(plan, game, non_ce_strategy, 1, REJECT_COUNTS)
    assert d.outcome is Outcome.REJECT_BY_EQ2
    assert d.statistic is None
    assert d.p_value is None


def test_decision_reject_by_zero_cell(game):
    sigma = CorrelatedStrategy([0.0, 0.5, 0.25, 0.25])
    plan = manual_plan(game, sigma, alpha=0.1, delta_hat=0.01, sample_size=100)
    d = run_sampling_decision(plan, game, sigma, 0, [2, 49, 25, 24])
    assert d.outcome is Outcome.REJECT_BY_ZERO_CELL
    assert d.statistic is None
    # zero-cell strategies drop a degree of freedom
    assert plan.df_total == 2


def test_decision_outcome_matches_critical_value(game, ce_strategy):
    plan = manual_plan(game, ce_strategy, alpha=0.1, delta_hat=0.01, sample_size=2100)
    rng = np.random.default_rng(12)
    for _ in range(25):
        counts = rng.multinomial(2100, ce_strategy.probs)
        d = run_sampling_decision(plan, game, ce_strategy, 0, counts)
        assert (d.outcome is Outcome.REJECT_BY_STATISTIC) == (d.statistic >= plan.critical_value)
