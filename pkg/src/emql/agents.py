"""Tabular agents acting on delayed observations.

All four agents share the same episode protocol::

    agent.begin_episode(s0)        # the initial state is known immediately
    a = agent.act(rng)             # once per environment step
    agent.ingest(channel.poll(t))  # whatever observations landed
    ...
    agent.ingest(channel.flush())
    agent.end_episode()            # planner refresh

Observation ``k`` carries ``s_k`` and the reward ``r_{k-1}`` earned by the
action that led there. Timestamps restart at zero every episode.

``EmqlAgent``
    counted model of the true MDP; acts on the belief-weighted Q row.
``MbsAgent``
    same model; acts greedily for the most likely current state.
``EmdpAgent``
    counted model of the augmented MDP whose state is the last known state
    plus the ``d`` actions taken since (constant delays only).
``DqAgent``
    model-free Q-learning on delayed tuples, acting on the stale state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import OpCounter, emql_action_values, most_likely_state
from .channel import DelayModel, DelayedObservation
from .errors import ConfigError
from .mdp import MdpSpec, TabularModel, make_model

AGENT_KINDS = ("emql", "mbs", "emdp", "dq")


def epsilon(total_count: int, state_count: int, num_states: int) -> float:
    """Count-based exploration rate ``log(|S| * total + 1) / (state_count + 1)``.

    May exceed 1 early in training; callers clamp before sampling.
    """
    if total_count < 0 or state_count < 0:
        raise ValueError("counts must be non-negative")
    return math.log(num_states * total_count + 1) / (state_count + 1)


def encode_augmented(base: int, tail, num_actions: int) -> int:
    code = base
    for a in tail:
        code = code * num_actions + int(a)
    return code


def decode_augmented(code: int, num_actions: int, d: int) -> tuple[int, tuple[int, ...]]:
    tail = []
    for _ in range(d):
        code, a = divmod(code, num_actions)
        tail.append(a)
    return code, tuple(reversed(tail))


@dataclass
class AgentView:
    """What the agent knows inside the current episode."""

    states: dict = field(default_factory=dict)  # timestamp -> state
    rewards: dict = field(default_factory=dict)  # timestamp -> reward on arrival there
    actions: list = field(default_factory=list)  # actions[t] played at step t
    last_known_timestamp: int = 0

    @property
    def now(self) -> int:
        return len(self.actions)

    @property
    def last_known_state(self) -> int:
        return self.states[self.last_known_timestamp]

    @property
    def action_log(self) -> list:
        return self.actions[self.last_known_timestamp:]


class DelayedAgent:
    """Episode bookkeeping shared by every agent.

    Subclasses provide ``_action_values``, ``_exploration_counts`` and the hooks
    ``_candidates``/``_ready``/``_learn`` that turn arrivals into learning
    updates. Each candidate step ``t`` is learned from exactly once.
    """

    kind = "base"

    def __init__(self, num_states: int, num_actions: int, gamma: float = 0.95, r_max: float = 1.0):
        self.spec = MdpSpec(num_states, num_actions, gamma, r_max)
        self.view = AgentView()
        self.epsilon_override: float | None = None
        self.tie_break = "random"
        self.duplicate_arrivals = 0
        self.transitions_recorded = 0
        self._learned: set[int] = set()

    @property
    def num_actions(self) -> int:
        return self.spec.num_actions

    def begin_episode(self, s0: int) -> None:
        self.view = AgentView(states={0: int(s0)})
        self._learned = set()

    def exploration_rate(self) -> float:
        if self.epsilon_override is not None:
            return self.epsilon_override
        total, state_count, n = self._exploration_counts()
        return epsilon(total, state_count, n)

    def act(self, rng: np.random.Generator) -> int:
        # Fixed draw pattern (coin, then tie-break or random action) keeps
        # agents with equal seeds in lockstep.
        explore = rng.random() < min(1.0, self.exploration_rate())
        if explore:
            a = int(rng.integers(self.num_actions))
        else:
            values = self._action_values()
            u = rng.random()
            if self.tie_break == "random":
                best = np.flatnonzero(values == values.max())
                a = int(best[int(u * best.size)])
            else:
                a = int(np.argmax(values))
        self.view.actions.append(a)
        return a

    def ingest(self, arrivals: list[DelayedObservation]) -> None:
        view = self.view
        for obs in arrivals:
            k = obs.timestamp
            if k in view.states or k <= 0:
                self.duplicate_arrivals += 1
                continue
            view.states[k] = int(obs.state)
            view.rewards[k] = float(obs.reward)
            if k > view.last_known_timestamp:
                view.last_known_timestamp = k
            for t in self._candidates(k):
                if t not in self._learned and 0 <= t < view.now and self._ready(t):
                    self._learned.add(t)
                    self._learn(t)
                    self.transitions_recorded += 1

    def end_episode(self) -> None:
        pass

    # -- hooks ----------------------------------------------------------------

    def _candidates(self, k: int):
        """Steps whose learning update may have been unlocked by arrival ``k``."""
        return (k - 1, k)

    def _ready(self, t: int) -> bool:
        states = self.view.states
        return t in states and t + 1 in states

    def _base_tuple(self, t: int):
        v = self.view
        return v.states[t], v.actions[t], v.states[t + 1], v.rewards[t + 1]


class EmqlAgent(DelayedAgent):
    """Model-based learner acting on the belief-weighted Q row."""

    kind = "emql"

    def __init__(self, num_states, num_actions, gamma=0.95, r_max=1.0, planner="sweep", sparse_storage=None):
        super().__init__(num_states, num_actions, gamma, r_max)
        self.model = make_model(self.spec, sparse_storage)
        self.planner = planner
        self.total_count = 0
        self.counter: OpCounter | None = None

    def _exploration_counts(self):
        s = self.view.last_known_state
        return self.total_count, int(self.model.visit_counts[s].sum()), self.spec.num_states

    def _transitions(self):
        # Dense models hand over the raw (S, A, S) array; sparse ones themselves.
        return self.model.p_hat if isinstance(self.model, TabularModel) else self.model

    def _action_values(self) -> np.ndarray:
        v = self.view
        return emql_action_values(v.last_known_state, v.action_log, self._transitions(), self.model.q, self.counter)

    def _learn(self, t: int) -> None:
        self.model.record_transition(*self._base_tuple(t))
        self.total_count += 1

    def end_episode(self) -> None:
        self.model.plan(self.planner)


class MbsAgent(EmqlAgent):
    """Same learner as EMQL; plays the greedy action of the most likely state."""

    kind = "mbs"

    def _action_values(self) -> np.ndarray:
        v = self.view
        s_star = most_likely_state(v.last_known_state, v.action_log, self._transitions(), self.spec.num_states)
        return self.model.q[s_star]


class EmdpAgent(DelayedAgent):
    """Model-based learner on the augmented state ``(s_{t-d}, a_{t-d}, ..., a_{t-1})``.

    Before ``d`` actions exist in an episode the missing oldest tail slots
    are filled with action 0, and the base is the initial state.
    """

    kind = "emdp"

    def __init__(self, num_states, num_actions, delay, gamma=0.95, r_max=1.0, planner="sweep", sparse_storage=None):
        if isinstance(delay, DelayModel):
            if not delay.is_constant:
                raise ConfigError(
                    "the augmented-state agent needs a constant delay; "
                    f"got {delay.kind} delay"
                )
            delay = delay.d
        super().__init__(num_states, num_actions, gamma, r_max)
        self.d = int(delay)
        self.base_states = num_states
        aug_states = num_states * num_actions**self.d
        self.aug_spec = MdpSpec(aug_states, num_actions, gamma, r_max)
        self.model = make_model(self.aug_spec, sparse_storage)
        self.planner = planner
        self.total_count = 0

    def _tail(self, t: int):
        acts = self.view.actions
        return [acts[j] if j >= 0 else 0 for j in range(t - self.d, t)]

    def augmented_code(self, t: int) -> int:
        base = self.view.states[max(t - self.d, 0)]
        return encode_augmented(base, self._tail(t), self.num_actions)

    def _current_code(self) -> int:
        v = self.view
        return encode_augmented(v.last_known_state, self._tail(v.now), self.num_actions)

    def _exploration_counts(self):
        code = self._current_code()
        return self.total_count, int(self.model.visit_counts[code].sum()), self.aug_spec.num_states

    def _action_values(self) -> np.ndarray:
        return self.model.q[self._current_code()]

    def _candidates(self, k):
        return (k - 1, k + self.d - 1, k + self.d)

    def _ready(self, t):
        states = self.view.states
        return (
            t + 1 in states
            and max(t - self.d, 0) in states
            and max(t + 1 - self.d, 0) in states
        )

    def _learn(self, t):
        v = self.view
        self.model.record_transition(
            self.augmented_code(t), v.actions[t], self.augmented_code(t + 1), v.rewards[t + 1]
        )
        self.total_count += 1

    def end_episode(self) -> None:
        self.model.plan(self.planner)


class DqAgent(DelayedAgent):
    """Memoryless baseline: greedy on the last known state, Q-learning on delayed tuples."""

    kind = "dq"

    def __init__(self, num_states, num_actions, gamma=0.95, r_max=1.0, alpha=0.1):
        super().__init__(num_states, num_actions, gamma, r_max)
        self.alpha = alpha
        self.q = np.zeros((num_states, num_actions))
        self.visit_counts = np.zeros((num_states, num_actions), dtype=np.int64)
        self.total_count = 0

    def _exploration_counts(self):
        s = self.view.last_known_state
        return self.total_count, int(self.visit_counts[s].sum()), self.spec.num_states

    def _action_values(self) -> np.ndarray:
        return self.q[self.view.last_known_state]

    def _learn(self, t):
        s, a, s_next, r = self._base_tuple(t)
        target = r + self.spec.gamma * self.q[s_next].max()
        self.q[s, a] = (1 - self.alpha) * self.q[s, a] + self.alpha * target
        self.visit_counts[s, a] += 1
        self.total_count += 1


def make_agent(
    kind: str,
    num_states: int,
    num_actions: int,
    delay: DelayModel,
    gamma: float = 0.95,
    r_max: float = 1.0,
    alpha: float = 0.1,
    planner: str = "sweep",
) -> DelayedAgent:
    if kind == "emql":
        return EmqlAgent(num_states, num_actions, gamma, r_max, planner)
    if kind == "mbs":
        return MbsAgent(num_states, num_actions, gamma, r_max, planner)
    if kind == "emdp":
        return EmdpAgent(num_states, num_actions, delay, gamma, r_max, planner)
    if kind == "dq":
        return DqAgent(num_states, num_actions, gamma, r_max, alpha)
    raise ConfigError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")
