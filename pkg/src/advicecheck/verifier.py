"""The sampling test: statistic, sensitivity, worst-case measures, planning.

An agent that follows the announced strategy's signals collects the public
joint-action counts over a block of l_T rounds and compares them against the
announced distribution with a Pearson goodness-of-fit statistic. Planning
works backward from a single target error probability p:

  * alpha = p and the critical value is the (1 - alpha) chi-square quantile
    at df_total = |A| - 1 - |zeta| degrees of freedom (zeta = announced zero
    cells, which are excluded everywhere);
  * psi is the worst case, over nonempty deviating subsets, of the chance
    that uniformly drawn fall-back strategies produce a deviation too small
    to detect (sensitivity below delta_hat) - a Lebesgue-measure ratio
    estimated by Monte Carlo;
  * the Type-2 budget solves p = (1 - psi) * beta + psi, i.e.
    beta = (p - psi) / (1 - psi) (the (1-P)^l_T zero-cell factor is <= 1 and
    is dropped, which only makes the plan more conservative);
  * l_T is the smallest sample size meeting that budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from . import chi2
from .errors import InfeasiblePlanError, InvalidInputError, ZeroCellObserved
from .games import (
    CorrelatedStrategy,
    Game,
    agent_incentive_violations,
    joint_distribution,
    marginal_excluding,
)

DEFAULT_MC_SAMPLES = 200_000
MAX_PSI_AGENTS = 12  # 2^n subsets


class Outcome(Enum):
    FOLLOW_MEDIATOR = "FollowMediator"
    REJECT_BY_EQ2 = "RejectByEq2"
    REJECT_BY_ZERO_CELL = "RejectByZeroCell"
    REJECT_BY_STATISTIC = "RejectByStatistic"


@dataclass(frozen=True)
class Decision:
    """Outcome of one agent's sampling test."""

    outcome: Outcome
    statistic: float | None = None
    p_value: float | None = None

    @property
    def rejected(self) -> bool:
        return self.outcome is not Outcome.FOLLOW_MEDIATOR


@dataclass(frozen=True)
class PsiEstimate:
    """Monte-Carlo estimate of the worst-case undetectable-deviation measure."""

    psi: float
    std_error: float
    per_subset: dict[tuple[int, ...], float]
    mc_samples: int


@dataclass(frozen=True)
class TestPlan:
    """Derived parameters of one sampling test."""

    p_target: float
    alpha: float
    critical_value: float
    delta_hat: float
    psi: float | None
    psi_se: float | None
    beta: float
    sample_size: int
    zero_cells: tuple[int, ...]
    df_total: int

    def as_dict(self) -> dict:
        return {
            "p_target": self.p_target,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "delta_hat": self.delta_hat,
            "psi": self.psi,
            "psi_se": self.psi_se,
            "beta": self.beta,
            "sample_size": self.sample_size,
            "zero_cells": list(self.zero_cells),
            "df_total": self.df_total,
        }


def zeta_cells(sigma: CorrelatedStrategy) -> tuple[int, ...]:
    """Joint-action indices the announced strategy rules out entirely."""
    return sigma.zero_cells()


def pearson_statistic(observed_counts, sigma_m: CorrelatedStrategy, l_t: int) -> float:
    """Pearson goodness-of-fit statistic against the announced distribution.

    Sums (X(a) - l_t*sigma(a))^2 / (l_t*sigma(a)) over every cell with
    positive announced probability. Counts observed on an announced-zero cell
    raise ZeroCellObserved: such an observation refutes the announced
    strategy outright and no statistic is defined.
    """
    counts = np.asarray(observed_counts)
    probs = sigma_m.probs
    if counts.shape != probs.shape:
        raise InvalidInputError("observed_counts and strategy have different lengths")
    if np.any(counts < 0):
        raise InvalidInputError("observed_counts must be nonnegative")
    total = int(counts.sum())
    if total != int(l_t):
        raise InvalidInputError(f"observed_counts sum to {total}, expected l_t={l_t}")
    zero = probs == 0.0
    if np.any(counts[zero] > 0):
        raise ZeroCellObserved(np.flatnonzero(zero & (counts > 0)))
    expected = l_t * probs[~zero]
    resid = counts[~zero] - expected
    return float((resid * resid / expected).sum())


def _prob_seq(sigma):
    if isinstance(sigma, CorrelatedStrategy):
        return list(sigma.probs)
    return list(sigma)


def sensitivity_delta(sigma_m, sigma_tilde) -> float | Fraction:
    """Chi-square style divergence of the actually-played distribution.

    delta = sum over announced-positive cells of
    (tilde(a) - sigma(a))^2 / sigma(a). Announced-zero cells are excluded.
    Accepts CorrelatedStrategy or plain sequences; exact rational inputs
    (fractions.Fraction) are computed exactly.
    """
    m = _prob_seq(sigma_m)
    t = _prob_seq(sigma_tilde)
    if len(m) != len(t):
        raise InvalidInputError("distributions have different lengths")
    total = 0
    for pm, pt in zip(m, t):
        if pm == 0:
            continue
        diff = pt - pm
        total += diff * diff / pm
    return total


def _delta_matrix(samples: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Vectorized sensitivity of many candidate distributions (rows)."""
    mask = sigma > 0
    diff = samples[:, mask] - sigma[mask]
    return (diff * diff / sigma[mask]).sum(axis=1)


def _uniform_simplex(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    g = rng.exponential(size=(n, dim))
    return g / g.sum(axis=1, keepdims=True)


def _composed_samples(game: Game, tensor: np.ndarray, devs: tuple[int, ...], gammas: dict) -> np.ndarray:
    """Distributions (rows) from composing sampled deviations with the marginal."""
    keep = [i for i in range(game.num_agents) if i not in devs]
    marg = tensor.sum(axis=tuple(devs))
    n = next(iter(gammas.values())).shape[0]
    out = np.empty((n, game.num_joint_actions))
    for flat, idx in enumerate(np.ndindex(*game.action_counts)):
        base = float(marg[tuple(idx[i] for i in keep)]) if keep else 1.0
        col = np.full(n, base)
        for d in devs:
            col = col * gammas[d][:, idx[d]]
        out[:, flat] = col
    return out


def estimate_psi(
    game: Game,
    sigma_m: CorrelatedStrategy,
    delta_hat: float,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> PsiEstimate:
    """Worst case over deviating subsets of the undetectable-deviation measure.

    For each nonempty subset of agents, draws their fall-back strategies
    uniformly from the product of simplices, composes them with the announced
    strategy's marginal on the rest, and estimates the fraction whose
    sensitivity falls below delta_hat. Returns the maximum over subsets with
    the binomial standard error of the maximizing subset. Per-subset draws use
    sub-seeds derived from (seed, subset rank), so results do not depend on
    evaluation order.
    """
    if delta_hat <= 0:
        raise InvalidInputError(f"delta_hat must be positive, got {delta_hat}")
    if mc_samples < 1000:
        raise InvalidInputError("mc_samples must be at least 1000")
    if game.num_agents > MAX_PSI_AGENTS:
        raise InvalidInputError(
            f"psi estimation enumerates 2^n subsets; {game.num_agents} agents exceed "
            f"the supported maximum of {MAX_PSI_AGENTS}"
        )
    probs = joint_distribution(sigma_m, game)
    tensor = probs.reshape(game.action_counts)
    per_subset: dict[tuple[int, ...], float] = {}
    best = (0.0, 0.0)
    rank = 0
    for r in range(1, game.num_agents + 1):
        for devs in itertools.combinations(range(game.num_agents), r):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rank,)))
            gammas = {d: _uniform_simplex(rng, mc_samples, game.action_counts[d]) for d in devs}
            composed = _composed_samples(game, tensor, devs, gammas)
            frac = float((_delta_matrix(composed, probs) < delta_hat).mean())
            per_subset[devs] = frac
            if frac >= best[0]:
                best = (frac, math.sqrt(frac * (1.0 - frac) / mc_samples))
            rank += 1
    return PsiEstimate(psi=best[0], std_error=best[1], per_subset=per_subset, mc_samples=mc_samples)


def prob_zero_cell_bound(game: Game, sigma_m: CorrelatedStrategy) -> float:
    """Lower bound on the per-round chance of landing in an announced-zero cell.

    P = sum over zero cells of the minimum, over nonempty deviating subsets,
    of marginal(non-deviators' part) * 1/|joint deviator actions|. Zero when
    the announced strategy has full support.
    """
    zeta = zeta_cells(sigma_m)
    if not zeta:
        return 0.0
    total = 0.0
    agents = range(game.num_agents)
    for cell in zeta:
        actions = game.joint_action(cell)
        best = math.inf
        for r in range(1, game.num_agents + 1):
            for devs in itertools.combinations(agents, r):
                keep = [i for i in agents if i not in devs]
                marg = marginal_excluding(sigma_m, game, devs, tuple(actions[i] for i in keep))
                size = math.prod(game.action_counts[d] for d in devs)
                best = min(best, marg / size)
        total += best
    return total


def plan_test(
    game: Game,
    sigma_m: CorrelatedStrategy,
    p: float,
    delta_hat: float,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> TestPlan:
    """Derive one sampling test's parameters from a target error probability.

    Both error types are budgeted at p: alpha = p, and the Type-2 budget is
    beta = (p - psi)/(1 - psi). Infeasible when psi (estimated) reaches p.
    """
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must be in (0, 1), got {p}")
    if delta_hat <= 0.0:
        raise InvalidInputError(f"delta_hat must be positive, got {delta_hat}")
    probs = joint_distribution(sigma_m, game)
    zeta = zeta_cells(sigma_m)
    df_total = len(probs) - 1 - len(zeta)
    if df_total < 1:
        raise InvalidInputError("announced strategy leaves fewer than two cells; no test possible")
    est = estimate_psi(game, sigma_m, delta_hat, mc_samples=mc_samples, seed=seed)
    if p <= est.psi:
        raise InfeasiblePlanError(p, est.psi)
    beta = (p - est.psi) / (1.0 - est.psi)
    alpha = p
    l_t = chi2.sample_size(alpha, beta, delta_hat, df_total)
    return TestPlan(
        p_target=p,
        alpha=alpha,
        critical_value=chi2.chi2_quantile(1.0 - alpha, df_total),
        delta_hat=delta_hat,
        psi=est.psi,
        psi_se=est.std_error,
        beta=beta,
        sample_size=l_t,
        zero_cells=zeta,
        df_total=df_total,
    )


def manual_plan(
    game: Game,
    sigma_m: CorrelatedStrategy,
    alpha: float,
    delta_hat: float,
    sample_size: int,
) -> TestPlan:
    """A plan with explicitly chosen alpha and length, skipping psi solving.

    Used by toy schedules for fast runs; beta reports the achieved Type-2
    probability at the given length and psi is left unset.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    probs = joint_distribution(sigma_m, game)
    zeta = zeta_cells(sigma_m)
    df_total = len(probs) - 1 - len(zeta)
    if df_total < 1:
        raise InvalidInputError("announced strategy leaves fewer than two cells; no test possible")
    beta = chi2.power_beta(
        chi2.PowerQuery(alpha=alpha, delta_hat=delta_hat, df_total=df_total, sample_size=sample_size)
    )
    return TestPlan(
        p_target=alpha,
        alpha=alpha,
        critical_value=chi2.chi2_quantile(1.0 - alpha, df_total),
        delta_hat=delta_hat,
        psi=None,
        psi_se=None,
        beta=beta,
        sample_size=sample_size,
        zero_cells=zeta,
        df_total=df_total,
    )


def run_sampling_decision(
    plan: TestPlan,
    game: Game,
    sigma_m: CorrelatedStrategy,
    agent: int,
    observed_counts,
) -> Decision:
    """One agent's accept/reject decision at the end of a sampling test.

    The incentive screen comes first: an agent whose own constraints fail
    rejects without testing (it played its fall-back throughout). Otherwise a
    count on an announced-zero cell rejects outright; otherwise the statistic
    decides against the critical value, with its survival probability
    attached as a p-value.
    """
    if agent_incentive_violations(game, sigma_m, agent):
        return Decision(outcome=Outcome.REJECT_BY_EQ2)
    try:
        stat = pearson_statistic(observed_counts, sigma_m, plan.sample_size)
    except ZeroCellObserved:
        return Decision(outcome=Outcome.REJECT_BY_ZERO_CELL)
    p_value = 1.0 - chi2.chi2_cdf(stat, plan.df_total)
    if stat >= plan.critical_value:
        return Decision(outcome=Outcome.REJECT_BY_STATISTIC, statistic=stat, p_value=p_value)
    return Decision(outcome=Outcome.FOLLOW_MEDIATOR, statistic=stat, p_value=p_value)
