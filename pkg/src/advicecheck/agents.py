"""Agent behavior: signal following, fall-back strategies, and learners.

Learners expose strategies rather than sampled actions; the simulation rng
does the sampling. Every provided learner is flexible: after reset() its next
strategy equals a freshly constructed instance's, so nothing from before a
free period can leak into it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidInputError
from .games import Game, MixedStrategy
from .schedule import Phase, PhaseKind


class Mode(Enum):
    FOLLOWING_MEDIATOR = "FollowingMediator"
    REJECTED_BY_EQ2 = "RejectedByEq2"
    REJECTED_BY_TEST = "RejectedByTest"

    @property
    def rejected(self) -> bool:
        return self is not Mode.FOLLOWING_MEDIATOR


class Learner:
    """Behavior contract: reset(), observe(joint action), next_strategy()."""

    def reset(self) -> None:
        raise NotImplementedError

    def observe(self, joint_action: tuple[int, ...]) -> None:
        raise NotImplementedError

    def next_strategy(self) -> np.ndarray:
        """Distribution over own actions for the coming round."""
        raise NotImplementedError

    def stationary_strategy(self) -> np.ndarray | None:
        """Fixed i.i.d. strategy if play never depends on observations, else None."""
        return None


class UniformLearner(Learner):
    """Plays uniformly at random; the baseline learner."""

    def __init__(self, action_count: int):
        self._dist = np.full(action_count, 1.0 / action_count)

    def reset(self) -> None:
        pass

    def observe(self, joint_action) -> None:
        pass

    def next_strategy(self) -> np.ndarray:
        return self._dist

    def stationary_strategy(self) -> np.ndarray:
        return self._dist


class FictitiousPlayLearner(Learner):
    """Best response to each opponent's empirical action marginal since reset.

    Opponents are treated as independent; with no observations yet, each
    opponent is presumed uniform. Ties break toward the lowest action index.
    """

    def __init__(self, game: Game, agent: int):
        self.game = game
        self.agent = agent
        self._opponents = [i for i in range(game.num_agents) if i != agent]
        self._single = self._opponents[0] if len(self._opponents) == 1 else None
        self._counts = [[0] * c for c in game.action_counts]
        # own-utility tensor as nested lists (hot loop avoids numpy dispatch):
        # _u[own_action][opponent joint index], row-major over opponents
        own = game.action_counts[agent]
        tensor = np.moveaxis(game.utilities[:, agent].reshape(game.action_counts), agent, 0)
        self._u = tensor.reshape(own, -1).tolist()
        # point-mass strategies, one per own action (returned read-only)
        self._points = [[1.0 if i == a else 0.0 for i in range(own)] for a in range(own)]
        self._uniform_opp = [
            [1.0 / game.action_counts[i]] * game.action_counts[i] for i in range(game.num_agents)
        ]

    def reset(self) -> None:
        self._counts = [[0] * c for c in self.game.action_counts]

    def observe(self, joint_action) -> None:
        counts = self._counts
        for i in self._opponents:
            counts[i][joint_action[i]] += 1

    def _opponent_joint(self) -> list[float]:
        qs = []
        for i in self._opponents:
            c = self._counts[i]
            total = sum(c)
            qs.append([x / total for x in c] if total else self._uniform_opp[i])
        joint = qs[0]
        for q in qs[1:]:
            joint = [a * b for a in joint for b in q]
        return joint

    def next_strategy(self) -> list[float]:
        if self._single is not None:
            c = self._counts[self._single]
            # unnormalized empirical counts give the same argmax
            q = c if sum(c) else self._uniform_opp[self._single]
        else:
            q = self._opponent_joint()
        best, best_ev = 0, -1.0
        for a, row in enumerate(self._u):
            ev = sum(r * w for r, w in zip(row, q))
            if ev > best_ev:
                best, best_ev = a, ev
        return self._points[best]


class TriggerLearner(Learner):
    """Plays one action until a designated opponent action is seen, then switches.

    The trigger only watches observations since the last reset.
    """

    def __init__(self, action_count: int, initial_action: int, switch_action: int,
                 watch_agent: int, watch_action: int):
        if not 0 <= initial_action < action_count or not 0 <= switch_action < action_count:
            raise InvalidInputError("trigger actions out of range")
        self.action_count = action_count
        self.initial_action = initial_action
        self.switch_action = switch_action
        self.watch_agent = watch_agent
        self.watch_action = watch_action
        self.triggered = False

    def reset(self) -> None:
        self.triggered = False

    def observe(self, joint_action) -> None:
        if joint_action[self.watch_agent] == self.watch_action:
            self.triggered = True

    def next_strategy(self) -> np.ndarray:
        out = np.zeros(self.action_count)
        out[self.switch_action if self.triggered else self.initial_action] = 1.0
        return out


def make_learner(spec: dict | None, game: Game, agent: int) -> Learner:
    """Build a learner from a config spec: {"name": ..., **params}."""
    spec = dict(spec or {"name": "uniform"})
    name = spec.pop("name")
    if name == "uniform":
        return UniformLearner(game.action_counts[agent])
    if name == "fictitious-play":
        return FictitiousPlayLearner(game, agent)
    if name == "trigger":
        return TriggerLearner(
            action_count=game.action_counts[agent],
            initial_action=int(spec.get("initial_action", 0)),
            switch_action=int(spec.get("switch_action", 0)),
            watch_agent=int(spec.get("watch_agent", (agent + 1) % game.num_agents)),
            watch_action=int(spec.get("watch_action", 0)),
        )
    raise InvalidInputError(f"unknown learner {name!r}")


def draw_fallback(action_count: int, seed: int) -> MixedStrategy:
    """A strategy drawn uniformly from the simplex, deterministic in the seed.

    Uniformity comes from normalized exponential variates.
    """
    if action_count < 1:
        raise InvalidInputError("action_count must be positive")
    if action_count == 1:
        return MixedStrategy([1.0])
    rng = np.random.default_rng(seed)
    g = rng.exponential(size=action_count)
    return MixedStrategy(g / g.sum())


@dataclass
class AgentState:
    """One agent's run state: mode, fixed fall-back, and learner.

    The fall-back never changes after construction; mode transitions happen
    only at sampling-test boundaries (the engine owns them).
    """

    id: int
    fallback: MixedStrategy
    learner: Learner
    rng_seed: int
    mode: Mode = Mode.FOLLOWING_MEDIATOR
    _fallback_hash: int = field(init=False, repr=False)

    def __post_init__(self):
        self._fallback_hash = hash(self.fallback.probs.tobytes())

    def fallback_unchanged(self) -> bool:
        return hash(self.fallback.probs.tobytes()) == self._fallback_hash

    def begin_free_period(self) -> None:
        """Flexibility hook: wipe the learner at every free-period start."""
        self.learner.reset()


def sample_strategy(probs, rng: np.random.Generator) -> int:
    """Sample an action index from a distribution.

    Point masses return their support without consuming randomness; mixed
    strategies invert the CDF on one uniform draw.
    """
    hi = max(range(len(probs)), key=probs.__getitem__)
    if probs[hi] >= 1.0:
        return hi
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            return i
    return len(probs) - 1


def agent_act(state: AgentState, phase: Phase, signal: int | None, rng: np.random.Generator) -> int:
    """Choose this round's action.

    Following agents play the signal. Rejected agents play the fall-back
    during sampling tests and sample the learner's strategy during free
    periods (the learner has been reset at the period's start).
    """
    if state.mode is Mode.FOLLOWING_MEDIATOR:
        if signal is None:
            raise InvalidInputError("a following agent needs a signal")
        return int(signal)
    if phase.kind is PhaseKind.SAMPLING_TEST:
        probs = state.fallback.probs
    else:
        probs = state.learner.next_strategy()
    return sample_strategy(probs, rng)
