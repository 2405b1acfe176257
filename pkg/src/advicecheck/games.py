"""Normal-form stage games, correlated strategies, and equilibrium checks.

Joint actions are indexed row-major over (a_1, ..., a_n): agent 1's action is
the slowest-varying coordinate. Every vector over the joint action set uses
this order. Utilities must be nonnegative.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, UndefinedConditionalError

PROB_TOL = 1e-9
GAP_TOL = 1e-9


def _as_prob_vector(probs, name: str) -> np.ndarray:
    v = np.array(probs, dtype=float)  # copy: strategies own their storage
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if np.any(v < 0):
        raise InvalidInputError(f"{name} has negative entries")
    if abs(float(v.sum()) - 1.0) > PROB_TOL:
        raise InvalidInputError(f"{name} sums to {v.sum()!r}, not 1")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class MixedStrategy:
    """Probability distribution over a single agent's actions."""

    probs: np.ndarray

    def __init__(self, probs):
        object.__setattr__(self, "probs", _as_prob_vector(probs, "strategy"))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class CorrelatedStrategy:
    """Probability distribution over joint actions, row-major over agents."""

    probs: np.ndarray

    def __init__(self, probs):
        object.__setattr__(self, "probs", _as_prob_vector(probs, "correlated strategy"))

    def __len__(self) -> int:
        return len(self.probs)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def zero_cells(self) -> tuple[int, ...]:
        """Joint-action indices carrying exactly zero probability."""
        return tuple(int(i) for i in np.flatnonzero(self.probs == 0.0))


@dataclass(frozen=True)
class Game:
    """n-agent stage game: per-agent action counts and a utility tensor.

    ``utilities[joint_index][agent]`` is that agent's payoff at the joint
    action, with ``joint_index`` row-major over (a_1, ..., a_n).
    """

    action_counts: tuple[int, ...]
    utilities: np.ndarray
    action_names: tuple[tuple[str, ...], ...] | None = None

    def __init__(self, action_counts, utilities, action_names=None):
        counts = tuple(int(c) for c in action_counts)
        if not counts or any(c < 1 for c in counts):
            raise InvalidInputError("action_counts must be positive integers")
        u = np.array(utilities, dtype=float)  # copy: the game owns its storage
        expected = (math.prod(counts), len(counts))
        if u.shape != expected:
            raise InvalidInputError(f"utilities shape {u.shape} != {expected}")
        if np.any(u < 0):
            raise InvalidInputError("utilities must be nonnegative")
        if action_names is not None:
            action_names = tuple(tuple(names) for names in action_names)
            if tuple(len(n) for n in action_names) != counts:
                raise InvalidInputError("action_names do not match action_counts")
        object.__setattr__(self, "action_counts", counts)
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "action_names", action_names)
        u.setflags(write=False)

    @property
    def num_agents(self) -> int:
        return len(self.action_counts)

    @property
    def num_joint_actions(self) -> int:
        return self.utilities.shape[0]

    def joint_index(self, actions) -> int:
        """Row-major index of a joint action given per-agent action indices."""
        actions = tuple(int(a) for a in actions)
        if len(actions) != self.num_agents:
            raise InvalidInputError("joint action has wrong number of components")
        idx = 0
        for a, c in zip(actions, self.action_counts):
            if not 0 <= a < c:
                raise InvalidInputError(f"action index {a} out of range [0, {c})")
            idx = idx * c + a
        return idx

    def joint_action(self, index: int) -> tuple[int, ...]:
        """Per-agent action indices of a row-major joint index."""
        if not 0 <= index < self.num_joint_actions:
            raise InvalidInputError(f"joint index {index} out of range")
        out = []
        for c in reversed(self.action_counts):
            out.append(index % c)
            index //= c
        return tuple(reversed(out))

    def all_joint_actions(self):
        return itertools.product(*(range(c) for c in self.action_counts))


@dataclass(frozen=True)
class CeViolation:
    """One profitable deviation: following the signal loses ``gap`` utility."""

    agent: int
    signal: int
    deviation: int
    gap: float


@dataclass(frozen=True)
class CeVerdict:
    is_equilibrium: bool
    violations: tuple[CeViolation, ...] = field(default=())


def expected_utility(game: Game, profile) -> np.ndarray:
    """Expected utility per agent when each agent mixes independently.

    ``profile`` is one MixedStrategy (or raw probability vector) per agent.
    Exact linear form: sum over joint actions of u_i(a) * prod_j sigma_j(a_j).
    """
    if len(profile) != game.num_agents:
        raise InvalidInputError("profile must have one strategy per agent")
    strats = []
    for i, s in enumerate(profile):
        v = s.probs if isinstance(s, MixedStrategy) else _as_prob_vector(s, f"strategy {i}")
        if len(v) != game.action_counts[i]:
            raise InvalidInputError(f"strategy {i} has wrong action count")
        strats.append(v)
    joint = strats[0]
    for v in strats[1:]:
        joint = np.multiply.outer(joint, v)
    return joint.ravel() @ game.utilities


def joint_distribution(sigma: CorrelatedStrategy | np.ndarray, game: Game) -> np.ndarray:
    v = sigma.probs if isinstance(sigma, CorrelatedStrategy) else np.asarray(sigma, float)
    if len(v) != game.num_joint_actions:
        raise InvalidInputError("strategy length does not match the game's joint action set")
    return v


def conditional_given_signal(
    sigma: CorrelatedStrategy, game: Game, agent: int, signal: int
) -> np.ndarray:
    """Distribution of the other agents' joint signal given agent's signal.

    Returned over the row-major enumeration of the remaining agents' actions.
    Raises UndefinedConditionalError when the signal has zero marginal.
    """
    probs = joint_distribution(sigma, game)
    if not 0 <= agent < game.num_agents:
        raise InvalidInputError(f"agent {agent} out of range")
    if not 0 <= signal < game.action_counts[agent]:
        raise InvalidInputError(f"signal {signal} out of range for agent {agent}")
    tensor = probs.reshape(game.action_counts)
    slab = np.take(tensor, signal, axis=agent).ravel()
    total = float(slab.sum())
    if total <= 0.0:
        raise UndefinedConditionalError(
            f"signal {signal} of agent {agent} has zero marginal probability"
        )
    return slab / total


def signal_marginal(sigma: CorrelatedStrategy, game: Game, agent: int) -> np.ndarray:
    """Marginal distribution of one agent's signal under sigma."""
    tensor = joint_distribution(sigma, game).reshape(game.action_counts)
    axes = tuple(i for i in range(game.num_agents) if i != agent)
    return tensor.sum(axis=axes)


def _deviation_gaps(game: Game, tensor: np.ndarray, agent: int, signal: int):
    """Yield (deviation, gap) over all alternative actions at one signal.

    gap > 0 means deviating beats following; uses unnormalized conditional
    weights (the normalizer is positive and common to both sides).
    """
    weights = np.take(tensor, signal, axis=agent)  # over opponents' actions
    u = game.utilities[:, agent].reshape(game.action_counts)
    follow = float((weights * np.take(u, signal, axis=agent)).sum())
    marginal = float(weights.sum())
    for alt in range(game.action_counts[agent]):
        if alt == signal:
            continue
        dev = float((weights * np.take(u, alt, axis=agent)).sum())
        yield alt, (dev - follow) / marginal


def agent_incentive_violations(
    game: Game, sigma: CorrelatedStrategy, agent: int, tolerance: float = GAP_TOL
) -> list[CeViolation]:
    """Profitable deviations for one agent across its positive-marginal signals."""
    tensor = joint_distribution(sigma, game).reshape(game.action_counts)
    out = []
    for signal in range(game.action_counts[agent]):
        if float(np.take(tensor, signal, axis=agent).sum()) <= 0.0:
            continue  # zero-probability signal imposes no constraint
        for alt, gap in _deviation_gaps(game, tensor, agent, signal):
            if gap > tolerance:
                out.append(CeViolation(agent, signal, alt, gap))
    return out


def check_correlated_equilibrium(
    game: Game, sigma: CorrelatedStrategy, tolerance: float = GAP_TOL
) -> CeVerdict:
    """Verify the incentive constraints of a correlated strategy.

    For every agent and positive-marginal signal, following the signal must be
    at least as good (within tolerance) as any fixed deviation, under the
    conditional distribution of the others' signals. Equality counts as
    satisfied.
    """
    violations = []
    for agent in range(game.num_agents):
        violations.extend(agent_incentive_violations(game, sigma, agent, tolerance))
    return CeVerdict(is_equilibrium=not violations, violations=tuple(violations))


def marginal_excluding(
    sigma: CorrelatedStrategy, game: Game, excluded_agents, partial_action
) -> float:
    """Marginal probability of the non-excluded agents' partial joint action.

    Sums sigma over all actions of the excluded agents. With every agent
    excluded the result is 1; with none excluded it is sigma at the full
    joint action.
    """
    excluded = sorted(set(int(i) for i in excluded_agents))
    if any(i < 0 or i >= game.num_agents for i in excluded):
        raise InvalidInputError("excluded agent index out of range")
    keep = [i for i in range(game.num_agents) if i not in excluded]
    partial = tuple(int(a) for a in partial_action)
    if len(partial) != len(keep):
        raise InvalidInputError("partial_action must index exactly the non-excluded agents")
    for a, i in zip(partial, keep):
        if not 0 <= a < game.action_counts[i]:
            raise InvalidInputError(f"action {a} out of range for agent {i}")
    tensor = joint_distribution(sigma, game).reshape(game.action_counts)
    if excluded:
        tensor = tensor.sum(axis=tuple(excluded))
    return float(tensor[partial]) if keep else float(tensor)


def compose_deviation(sigma: CorrelatedStrategy, game: Game, deviations: dict) -> CorrelatedStrategy:
    """Joint distribution when some agents ignore signals and mix independently.

    ``deviations`` maps agent index -> MixedStrategy (or probability vector).
    Deviators' play is independent of everything else; the remaining agents'
    joint behavior is sigma's marginal on their action sets.
    """
    devs = {int(i): (s.probs if isinstance(s, MixedStrategy) else _as_prob_vector(s, f"gamma {i}"))
            for i, s in deviations.items()}
    for i, v in devs.items():
        if not 0 <= i < game.num_agents:
            raise InvalidInputError(f"deviating agent {i} out of range")
        if len(v) != game.action_counts[i]:
            raise InvalidInputError(f"deviation strategy for agent {i} has wrong length")
    tensor = joint_distribution(sigma, game).reshape(game.action_counts)
    if devs:
        marg = tensor.sum(axis=tuple(devs))
    else:
        marg = tensor
    out = np.zeros(game.action_counts)
    keep = [i for i in range(game.num_agents) if i not in devs]
    for idx in np.ndindex(*game.action_counts):
        p = float(marg[tuple(idx[i] for i in keep)]) if keep else 1.0
        for i, v in devs.items():
            p *= float(v[idx[i]])
        out[idx] = p
    return CorrelatedStrategy(out.ravel())


# --- file formats -----------------------------------------------------------
#
# Game file (JSON): {"num_agents": n, "action_counts": [..],
#                    "action_names": [[..], ..] (optional),
#                    "utilities": [[u_1, .., u_n], ..]}  row-major over A.
# Strategy file (JSON): flat row-major probability array  [p_1, .., p_|A|].


def load_game(path) -> Game:
    with open(path) as fh:
        data = json.load(fh)
    try:
        counts = data["action_counts"]
        utilities = data["utilities"]
    except (TypeError, KeyError) as exc:
        raise InvalidInputError(f"game file {path} is missing field {exc}") from exc
    if "num_agents" in data and int(data["num_agents"]) != len(counts):
        raise InvalidInputError("num_agents does not match action_counts")
    return Game(counts, utilities, data.get("action_names"))


def load_strategy(path) -> CorrelatedStrategy:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise InvalidInputError(f"strategy file {path} must be a flat JSON array")
    return CorrelatedStrategy(data)


def save_game(game: Game, path) -> None:
    data = {
        "num_agents": game.num_agents,
        "action_counts": list(game.action_counts),
        "utilities": game.utilities.tolist(),
    }
    if game.action_names is not None:
        data["action_names"] = [list(n) for n in game.action_names]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_strategy(sigma: CorrelatedStrategy, path) -> None:
    with open(path, "w") as fh:
        json.dump(sigma.probs.tolist(), fh)
        fh.write("\n")
