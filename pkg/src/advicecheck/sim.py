"""Repeated-game engine: signals, actions, histories, ledgers, decisions.

Each round the mediator draws a joint signal from the announced strategy and
delivers each agent its own component privately. Agents act according to
their mode: following agents play the signal; rejected agents play their
fixed fall-back during sampling tests and their (reset) learner during free
periods. At the end of every sampling test each agent runs the decision on
that test's public counts, and the outcomes set modes for the following free
period.

Two runners share these dynamics:

* ``run_game`` records every round (the full transcript contract);
* ``run_game_counts`` keeps only per-phase counts, drawing one exact
  multinomial per phase whenever every active behavior is i.i.d. within the
  phase, which makes astronomically long phases cheap.

Utility ledgers accumulate exact rationals (Fractions built from the
binary-exact float payoffs), so phase segments partition totals exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .agents import AgentState, Mode, agent_act, make_learner, sample_strategy
from .errors import InvalidInputError, NoDataError
from .games import (
    CorrelatedStrategy,
    Game,
    MixedStrategy,
    agent_incentive_violations,
    compose_deviation,
    joint_distribution,
)
from .schedule import Phase, PhaseKind, Schedule
from .verifier import Decision, Outcome, run_sampling_decision


@dataclass(frozen=True)
class RoundRecord:
    t: int
    phase_kind: str
    phase_index: int
    signals: tuple[int, ...]
    joint_index: int
    actions: tuple[int, ...]
    utilities: tuple[float, ...]


@dataclass
class Transcript:
    """Full per-round record of one run."""

    config: dict
    seed: int
    game: Game
    sigma_m: CorrelatedStrategy
    rounds: list[RoundRecord] = field(default_factory=list)
    decisions: dict[tuple[int, int], Decision] = field(default_factory=dict)

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)


@dataclass(frozen=True)
class EmpiricalFrequency:
    """Counts of each joint action over a window."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise InvalidInputError("counts do not sum to total")

    def distribution(self) -> np.ndarray:
        if self.total == 0:
            raise NoDataError("empty window has no distribution")
        return self.counts / self.total


@dataclass(frozen=True)
class LedgerSegment:
    kind: str
    index: int
    begin: int
    length: int
    totals: tuple[Fraction, ...]


@dataclass
class UtilityLedger:
    """Per-agent cumulative utility, segmented by phase."""

    segments: list[LedgerSegment]
    num_agents: int
    per_round: list[tuple[Fraction, ...]] | None = None

    def totals(self) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * self.num_agents
        for seg in self.segments:
            for i in range(self.num_agents):
                out[i] += seg.totals[i]
        return tuple(out)

    @property
    def num_rounds(self) -> int:
        return sum(seg.length for seg in self.segments)


def build_ledger(run) -> UtilityLedger:
    """Ledger from a Transcript (round-resolved) or RunSummary (phase-resolved)."""
    if isinstance(run, Transcript):
        n = run.game.num_agents
        segments = []
        per_round = []

        def flush(key, begin, length, totals):
            segments.append(LedgerSegment(key[0], key[1], begin, length, tuple(totals)))

        key = begin = None
        length = 0
        totals = [Fraction(0)] * n
        for rec in run.rounds:
            utilities = tuple(Fraction(u) for u in rec.utilities)
            per_round.append(utilities)
            rec_key = (rec.phase_kind, rec.phase_index)
            if rec_key != key:
                if key is not None:
                    flush(key, begin, length, totals)
                key, begin, length = rec_key, rec.t, 0
                totals = [Fraction(0)] * n
            for i, u in enumerate(utilities):
                totals[i] += u
            length += 1
        if key is not None:
            flush(key, begin, length, totals)
        return UtilityLedger(segments=segments, num_agents=n, per_round=per_round)
    segments = [
        LedgerSegment(pr.phase.kind.value, pr.phase.index, pr.phase.begin, pr.rounds_run,
                      pr.utility_totals)
        for pr in run.phase_results
    ]
    return UtilityLedger(segments=segments, num_agents=run.game.num_agents)


def average_utility(ledger: UtilityLedger, agent: int, up_to_t: int) -> float:
    """Cumulative utility / t over rounds 1..up_to_t.

    Round-resolved ledgers support any t; phase-resolved ledgers support
    phase boundaries only.
    """
    if up_to_t < 1:
        raise InvalidInputError("up_to_t must be >= 1")
    if up_to_t > ledger.num_rounds:
        raise InvalidInputError(f"up_to_t={up_to_t} beyond recorded {ledger.num_rounds} rounds")
    if ledger.per_round is not None:
        total = sum((u[agent] for u in ledger.per_round[:up_to_t]), Fraction(0))
        return float(total / up_to_t)
    total = Fraction(0)
    covered = 0
    for seg in ledger.segments:
        if covered + seg.length <= up_to_t:
            total += seg.totals[agent]
            covered += seg.length
            if covered == up_to_t:
                return float(total / up_to_t)
        else:
            break
    raise InvalidInputError(
        f"phase-resolved ledger: up_to_t={up_to_t} is not a phase boundary"
    )


def phase_average(ledger: UtilityLedger, agent: int, kind: str) -> float:
    """Average utility restricted to phases of one kind ("R" or "F")."""
    total = Fraction(0)
    rounds = 0
    for seg in ledger.segments:
        if seg.kind == kind:
            total += seg.totals[agent]
            rounds += seg.length
    if rounds == 0:
        raise NoDataError(f"no rounds of kind {kind!r} in the ledger")
    return float(total / rounds)


def empirical_frequency(transcript: Transcript, from_t: int, to_t: int) -> EmpiricalFrequency:
    """Counts of each joint action over the inclusive round window."""
    if not 1 <= from_t <= to_t <= transcript.num_rounds:
        raise InvalidInputError(
            f"window [{from_t}, {to_t}] invalid for {transcript.num_rounds} rounds"
        )
    counts = np.zeros(transcript.game.num_joint_actions, dtype=np.int64)
    for rec in transcript.rounds[from_t - 1 : to_t]:
        counts[rec.joint_index] += 1
    return EmpiricalFrequency(counts=counts, total=to_t - from_t + 1)


def tv_distance(p, q) -> float:
    """Total variation distance between two distributions over joint actions."""
    pv = p.probs if isinstance(p, CorrelatedStrategy) else np.asarray(p, dtype=float)
    qv = q.probs if isinstance(q, CorrelatedStrategy) else np.asarray(q, dtype=float)
    if pv.shape != qv.shape:
        raise InvalidInputError("distributions have different lengths")
    return 0.5 * float(np.abs(pv - qv).sum())


# --- engine -----------------------------------------------------------------


def _fallback_from(rng: np.random.Generator, action_count: int) -> MixedStrategy:
    if action_count == 1:
        return MixedStrategy([1.0])
    g = rng.exponential(size=action_count)
    return MixedStrategy(g / g.sum())


def _strides(game: Game) -> list[int]:
    out = [1] * game.num_agents
    for i in range(game.num_agents - 2, -1, -1):
        out[i] = out[i + 1] * game.action_counts[i + 1]
    return out


def _setup_agents(game, sigma_m, agent_configs, seed):
    configs = agent_configs or [{} for _ in range(game.num_agents)]
    if len(configs) != game.num_agents:
        raise InvalidInputError("need one agent config per agent")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(1 + game.num_agents)
    mediator_rng = np.random.default_rng(children[0])
    states = []
    agent_rngs = []
    for i, cfg in enumerate(configs):
        rng = np.random.default_rng(children[1 + i])
        agent_rngs.append(rng)
        if cfg.get("fallback") is not None:
            fallback = MixedStrategy(cfg["fallback"])
            if len(fallback) != game.action_counts[i]:
                raise InvalidInputError(f"fallback for agent {i} has wrong length")
        else:
            fallback = _fallback_from(rng, game.action_counts[i])
        learner = make_learner(cfg.get("learner"), game, i)
        mode = (
            Mode.REJECTED_BY_EQ2
            if agent_incentive_violations(game, sigma_m, i)
            else Mode.FOLLOWING_MEDIATOR
        )
        states.append(AgentState(id=i, fallback=fallback, learner=learner,
                                 rng_seed=seed, mode=mode))
    return mediator_rng, agent_rngs, states


def _apply_decision(state: AgentState, decision: Decision) -> None:
    if decision.outcome is Outcome.FOLLOW_MEDIATOR:
        state.mode = Mode.FOLLOWING_MEDIATOR
    elif decision.outcome is Outcome.REJECT_BY_EQ2:
        state.mode = Mode.REJECTED_BY_EQ2
    else:
        state.mode = Mode.REJECTED_BY_TEST


def _config_snapshot(game, sigma_m, schedule, agent_configs, seed, rounds):
    return {
        "action_counts": list(game.action_counts),
        "sigma_m": sigma_m.probs.tolist(),
        "num_phases": len(schedule.phases),
        "horizon": schedule.horizon,
        "agent_configs": agent_configs,
        "seed": seed,
        "rounds": rounds,
    }


def run_game(
    game: Game,
    sigma_m: CorrelatedStrategy,
    schedule: Schedule,
    agent_configs: list[dict] | None = None,
    seed: int = 0,
    rounds: int | None = None,
    signal_override=None,
) -> Transcript:
    """Run the repeated game, recording every round.

    ``rounds`` caps the run (None runs the whole schedule horizon; 0 yields
    an empty transcript). Decisions occur only for tests that complete within
    the cap. ``signal_override`` (a sequence of joint indices) replaces the
    mediator's draws; it exists for tests.
    """
    probs = joint_distribution(sigma_m, game)
    horizon = schedule.horizon if rounds is None else min(rounds, schedule.horizon)
    if rounds is not None and rounds < 0:
        raise InvalidInputError("rounds must be nonnegative")
    mediator_rng, agent_rngs, states = _setup_agents(game, sigma_m, agent_configs, seed)
    transcript = Transcript(
        config=_config_snapshot(game, sigma_m, schedule, agent_configs, seed, rounds),
        seed=seed,
        game=game,
        sigma_m=sigma_m,
    )
    decode = [game.joint_action(i) for i in range(game.num_joint_actions)]
    n_joint = game.num_joint_actions
    for phase in schedule.phases:
        if phase.begin > horizon:
            break
        length = min(phase.end, horizon) - phase.begin + 1
        complete = length == phase.length
        if phase.kind is PhaseKind.FREE_PERIOD:
            for st in states:
                st.begin_free_period()
        if signal_override is not None:
            signals = np.asarray(signal_override[phase.begin - 1 : phase.begin - 1 + length])
        else:
            signals = mediator_rng.choice(n_joint, size=length, p=probs)
        counts = np.zeros(n_joint, dtype=np.int64)
        for off in range(length):
            s_joint = int(signals[off])
            s_components = decode[s_joint]
            actions = tuple(
                agent_act(st, phase, s_components[st.id], agent_rngs[st.id]) for st in states
            )
            joint = game.joint_index(actions)
            counts[joint] += 1
            if phase.kind is PhaseKind.FREE_PERIOD:
                for st in states:
                    if st.mode.rejected:
                        st.learner.observe(actions)
            transcript.rounds.append(
                RoundRecord(
                    t=phase.begin + off,
                    phase_kind=phase.kind.value,
                    phase_index=phase.index,
                    signals=s_components,
                    joint_index=joint,
                    actions=actions,
                    utilities=tuple(float(u) for u in game.utilities[joint]),
                )
            )
        if phase.kind is PhaseKind.SAMPLING_TEST and complete:
            plan = schedule.plan_for(phase.index)
            if plan is not None:
                for st in states:
                    decision = run_sampling_decision(plan, game, sigma_m, st.id, counts)
                    transcript.decisions[(st.id, phase.index)] = decision
                    _apply_decision(st, decision)
    return transcript


@dataclass(frozen=True)
class PhaseResult:
    phase: Phase
    rounds_run: int
    counts: np.ndarray
    utility_totals: tuple[Fraction, ...]

    def empirical(self) -> EmpiricalFrequency:
        return EmpiricalFrequency(counts=self.counts, total=self.rounds_run)


@dataclass
class RunSummary:
    """Phase-aggregated record of one run (no per-round rows)."""

    config: dict
    seed: int
    game: Game
    sigma_m: CorrelatedStrategy
    phase_results: list[PhaseResult] = field(default_factory=list)
    decisions: dict[tuple[int, int], Decision] = field(default_factory=dict)


def _phase_behavior(states, phase):
    """Per-agent i.i.d. strategy for the phase, or None if sequential.

    Returns (deviators dict, sequential agents list). A following agent plays
    its signal component (not a deviator). Rejected agents are i.i.d. with
    their fall-back in tests; in free periods they are i.i.d. only when the
    learner declares a stationary strategy.
    """
    deviators = {}
    sequential = []
    for st in states:
        if st.mode is Mode.FOLLOWING_MEDIATOR:
            continue
        if phase.kind is PhaseKind.SAMPLING_TEST:
            deviators[st.id] = st.fallback.probs
        else:
            stationary = st.learner.stationary_strategy()
            if stationary is None:
                sequential.append(st.id)
            else:
                deviators[st.id] = stationary
    return deviators, sequential


def _exact_utility_totals(game: Game, counts: np.ndarray) -> tuple[Fraction, ...]:
    out = []
    for agent in range(game.num_agents):
        total = Fraction(0)
        col = game.utilities[:, agent]
        for idx in np.flatnonzero(counts):
            total += int(counts[idx]) * Fraction(float(col[idx]))
        out.append(total)
    return tuple(out)


def run_game_counts(
    game: Game,
    sigma_m: CorrelatedStrategy,
    schedule: Schedule,
    agent_configs: list[dict] | None = None,
    seed: int = 0,
    rounds: int | None = None,
) -> RunSummary:
    """Run the repeated game keeping only per-phase counts and decisions.

    Within a phase where every active behavior is i.i.d. (followers track the
    signal; rejected agents play fixed strategies), the joint behavior is the
    announced strategy composed with the deviators' mixes, and the phase's
    counts are one exact multinomial draw. Phases with sequential learners
    fall back to a per-round loop.
    """
    probs = joint_distribution(sigma_m, game)
    if rounds is not None and rounds < 0:
        raise InvalidInputError("rounds must be nonnegative")
    horizon = schedule.horizon if rounds is None else min(rounds, schedule.horizon)
    mediator_rng, agent_rngs, states = _setup_agents(game, sigma_m, agent_configs, seed)
    summary = RunSummary(
        config=_config_snapshot(game, sigma_m, schedule, agent_configs, seed, rounds),
        seed=seed,
        game=game,
        sigma_m=sigma_m,
    )
    decode = [game.joint_action(i) for i in range(game.num_joint_actions)]
    n_joint = game.num_joint_actions
    for phase in schedule.phases:
        if phase.begin > horizon:
            break
        length = min(phase.end, horizon) - phase.begin + 1
        complete = length == phase.length
        if phase.kind is PhaseKind.FREE_PERIOD:
            for st in states:
                st.begin_free_period()
        deviators, sequential = _phase_behavior(states, phase)
        if not sequential:
            dist = compose_deviation(sigma_m, game, deviators).probs if deviators else probs
            counts = mediator_rng.multinomial(length, dist).astype(np.int64)
        else:
            counts = np.zeros(n_joint, dtype=np.int64)
            signals = mediator_rng.choice(n_joint, size=length, p=probs).tolist()
            strides = _strides(game)
            observers = [st for st in states if st.mode.rejected]
            for off in range(length):
                s_components = decode[signals[off]]
                actions = tuple(
                    agent_act(st, phase, s_components[st.id], agent_rngs[st.id])
                    for st in states
                )
                joint = sum(a * s for a, s in zip(actions, strides))
                counts[joint] += 1
                if phase.kind is PhaseKind.FREE_PERIOD:
                    for st in observers:
                        st.learner.observe(actions)
        summary.phase_results.append(
            PhaseResult(
                phase=phase,
                rounds_run=length,
                counts=counts,
                utility_totals=_exact_utility_totals(game, counts),
            )
        )
        if phase.kind is PhaseKind.SAMPLING_TEST and complete:
            plan = schedule.plan_for(phase.index)
            if plan is not None:
                for st in states:
                    decision = run_sampling_decision(plan, game, sigma_m, st.id, counts)
                    summary.decisions[(st.id, phase.index)] = decision
                    _apply_decision(st, decision)
    return summary


@dataclass
class PureLearningRun:
    """Joint-learning baseline: counts and exact utility totals."""

    counts: np.ndarray
    utility_totals: tuple[Fraction, ...]
    rounds: int

    def average_utility(self, agent: int) -> float:
        if self.rounds == 0:
            raise NoDataError("zero-round run has no averages")
        return float(self.utility_totals[agent] / self.rounds)


def run_pure_learning(game: Game, learner_specs, rounds: int, seed: int = 0) -> PureLearningRun:
    """Joint play when every agent runs its learner for the whole horizon.

    No mediator, no tests, no resets: the baseline an agent would have earned
    by learning alone.
    """
    if rounds < 0:
        raise InvalidInputError("rounds must be nonnegative")
    learners = [make_learner(spec, game, i) for i, spec in enumerate(learner_specs)]
    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(game.num_agents)]
    counts = np.zeros(game.num_joint_actions, dtype=np.int64)
    strides = _strides(game)
    for _ in range(rounds):
        actions = tuple(
            sample_strategy(ln.next_strategy(), rngs[i]) for i, ln in enumerate(learners)
        )
        joint = sum(a * s for a, s in zip(actions, strides))
        counts[joint] += 1
        for ln in learners:
            ln.observe(actions)
    return PureLearningRun(
        counts=counts, utility_totals=_exact_utility_totals(game, counts), rounds=rounds
    )


def exact_window_expectation(
    game: Game, learner_specs, rounds: int, prepare=None
) -> list[list[Fraction]]:
    """Exact per-round expected joint-action distribution under joint learning.

    Enumerates every joint-action history of the given length, weighting by
    the product of the learners' strategies (all agents run their learners
    from a fresh start, as at a free period's beginning). ``prepare``, when
    given, replaces the default construction of fresh learners - e.g. to
    exercise reset machinery by feeding a pre-period history and resetting.
    Exponential in ``rounds``; intended for micro-horizons.
    """
    if rounds < 0:
        raise InvalidInputError("rounds must be nonnegative")
    n_joint = game.num_joint_actions
    totals: list[list[Fraction]] = [[Fraction(0)] * n_joint for _ in range(rounds)]
    joint_actions = list(game.all_joint_actions())
    if prepare is None:
        def prepare():
            return [make_learner(spec, game, i) for i, spec in enumerate(learner_specs)]

    def strategies_after(history):
        learners = prepare()
        for joint in history:
            for ln in learners:
                ln.observe(joint)
        return [ln.next_strategy() for ln in learners]

    def recurse(history, prob, depth):
        if depth == rounds:
            return
        strats = strategies_after(history)
        for flat, idx in enumerate(joint_actions):
            p = prob
            for i, s in enumerate(strats):
                p *= Fraction(float(s[idx[i]]))
                if p == 0:
                    break
            if p == 0:
                continue
            totals[depth][flat] += p
            recurse(history + [idx], p, depth + 1)

    recurse([], Fraction(1), 0)
    return totals


# --- exports ----------------------------------------------------------------


def transcript_to_csv(transcript: Transcript, path) -> None:
    """One row per round: t, phase, signals, actions, utilities."""
    n = transcript.game.num_agents
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "phase", "j"]
            + [f"signal_{i+1}" for i in range(n)]
            + [f"action_{i+1}" for i in range(n)]
            + [f"utility_{i+1}" for i in range(n)]
        )
        for rec in transcript.rounds:
            writer.writerow(
                [rec.t, rec.phase_kind, rec.phase_index]
                + list(rec.signals)
                + list(rec.actions)
                + [repr(u) for u in rec.utilities]
            )


def run_summary_dict(run) -> dict:
    """JSON-ready summary: decisions, per-phase averages, free-period TV."""
    game = run.game
    sigma = run.sigma_m
    if isinstance(run, Transcript):
        ledger = build_ledger(run)
        phase_rows = []
        pos = 0
        for seg in ledger.segments:
            row = {
                "phase": seg.kind,
                "j": seg.index,
                "begin": seg.begin,
                "length": seg.length,
                "avg_utility": [float(tot / seg.length) for tot in seg.totals],
            }
            if seg.kind == "F":
                counts = np.zeros(game.num_joint_actions, dtype=np.int64)
                for rec in run.rounds[pos : pos + seg.length]:
                    counts[rec.joint_index] += 1
                row["tv_to_announced"] = tv_distance(counts / seg.length, sigma)
            phase_rows.append(row)
            pos += seg.length
    else:
        phase_rows = []
        for pr in run.phase_results:
            row = {
                "phase": pr.phase.kind.value,
                "j": pr.phase.index,
                "begin": pr.phase.begin,
                "length": pr.rounds_run,
                "avg_utility": [float(tot / pr.rounds_run) for tot in pr.utility_totals],
            }
            if pr.phase.kind is PhaseKind.FREE_PERIOD:
                row["tv_to_announced"] = tv_distance(pr.counts / pr.rounds_run, sigma)
            phase_rows.append(row)
    decisions = {
        f"agent{agent+1}.test{j}": {
            "outcome": d.outcome.value,
            "statistic": d.statistic,
            "p_value": d.p_value,
        }
        for (agent, j), d in sorted(run.decisions.items())
    }
    return {"seed": run.seed, "phases": phase_rows, "decisions": decisions}


def write_summary_json(run, path) -> None:
    with open(path, "w") as fh:
        json.dump(run_summary_dict(run), fh, indent=2, sort_keys=True)
        fh.write("\n")


def batch_summary_dict(runs: list[RunSummary]) -> dict:
    """Aggregate many seeded runs with commutative reductions only.

    Reports per-test decision tallies, mean whole-run average utilities, and
    the mean/max distance of each run's final free period (when present) to
    the announcement. The result is independent of run order.
    """
    if not runs:
        raise InvalidInputError("need at least one run")
    game = runs[0].game
    tallies: dict[str, dict[str, int]] = {}
    util_sums = [Fraction(0)] * game.num_agents
    tvs = []
    for run in runs:
        for (agent, j), d in run.decisions.items():
            key = f"agent{agent+1}.test{j}"
            tallies.setdefault(key, {})
            tallies[key][d.outcome.value] = tallies[key].get(d.outcome.value, 0) + 1
        total_rounds = sum(pr.rounds_run for pr in run.phase_results)
        for a in range(game.num_agents):
            total = sum((pr.utility_totals[a] for pr in run.phase_results), Fraction(0))
            util_sums[a] += total / total_rounds
        frees = [pr for pr in run.phase_results if pr.phase.kind is PhaseKind.FREE_PERIOD]
        if frees:
            final = frees[-1]
            tvs.append(tv_distance(final.counts / final.rounds_run, run.sigma_m))
    out = {
        "num_seeds": len(runs),
        "seeds": sorted(run.seed for run in runs),
        "decision_tallies": {k: dict(sorted(v.items())) for k, v in sorted(tallies.items())},
        "mean_average_utility": [float(s / len(runs)) for s in util_sums],
    }
    if tvs:
        out["final_free_period_tv"] = {
            "mean": math.fsum(tvs) / len(tvs),  # exact rounding: order-free
            "max": max(tvs),
        }
    return out
