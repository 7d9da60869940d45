"""Conditional state distributions pushed through an action log.

The agent knows the state at some past step and every action it has taken
since. Propagating a one-hot vector through the estimated transition
matrices of those actions gives the distribution of the current, unseen
state; the action that maximises the belief-weighted Q row is played.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Below this mass a propagated belief is treated as empty.
MASS_FLOOR = 1e-12


@dataclass
class Belief:
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0):
            raise ValueError("belief entries must be non-negative")

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    def __len__(self):
        return self.probs.size


class OpCounter:
    """Tally of scalar multiply-adds spent in dense propagation."""

    def __init__(self):
        self.multiply_adds = 0


def one_hot(s: int, num_states: int) -> Belief:
    if not 0 <= s < num_states:
        raise IndexError(f"state {s} outside [0, {num_states})")
    probs = np.zeros(num_states)
    probs[s] = 1.0
    return Belief(probs)


def uniform(num_states: int) -> Belief:
    return Belief(np.full(num_states, 1.0 / num_states))


def _action_matrix(p_hat, a: int):
    """``(S, S)`` matrix for action ``a`` from a dense table or a per-action list."""
    if isinstance(p_hat, np.ndarray):
        return p_hat[:, a, :]
    if hasattr(p_hat, "transition_matrix"):
        return p_hat.transition_matrix(a)
    return p_hat[a]


def propagate(b: Belief, p_hat, a: int, counter: OpCounter | None = None) -> Belief:
    """``out[s'] = sum_s b[s] p_hat[s, a, s']``, without renormalising.

    ``p_hat`` is either a dense ``(S, A, S)`` array, a model exposing
    ``transition_matrix(a)``, or a sequence of per-action ``(S, S)``
    matrices (dense or scipy sparse).
    """
    mat = _action_matrix(p_hat, a)
    out = mat.T @ b.probs
    if counter is not None:
        counter.multiply_adds += b.probs.size * mat.shape[1]
    return Belief(np.asarray(out).ravel())


def expected_q(b: Belief, q: np.ndarray) -> np.ndarray:
    return b.probs @ q


def propagate_log(
    s_known: int,
    action_log: Sequence[int],
    p_hat,
    num_states: int,
    counter: OpCounter | None = None,
) -> Belief:
    """Push ``one_hot(s_known)`` through the actions in chronological order."""
    if not 0 <= s_known < num_states:
        raise IndexError(f"state {s_known} outside [0, {num_states})")
    probs = np.zeros(num_states)
    probs[s_known] = 1.0
    # Raw-array loop; this sits on the per-step hot path.
    for a in action_log:
        mat = _action_matrix(p_hat, a)
        if counter is not None:
            counter.multiply_adds += probs.size * mat.shape[1]
        probs = np.asarray(mat.T @ probs).ravel()
    return Belief(probs)


def emql_action_values(
    s_known: int,
    action_log: Sequence[int],
    p_hat,
    q: np.ndarray,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Belief-weighted Q row ``sum_s b[s] q[s, :]`` for the current step.

    A belief that lost all its mass through unvisited (all-zero) rows is
    replaced by the uniform distribution. Partially deflated beliefs are
    used as they are, since positive scaling leaves the argmax unchanged.
    """
    num_states = q.shape[0]
    b = propagate_log(s_known, action_log, p_hat, num_states, counter)
    if b.mass < MASS_FLOOR:
        b = uniform(num_states)
    return expected_q(b, q)


def get_emql_action(
    s_known: int,
    action_log: Sequence[int],
    p_hat,
    q: np.ndarray,
    counter: OpCounter | None = None,
) -> int:
    """Expectation-maximising action, lowest index on ties."""
    return int(np.argmax(emql_action_values(s_known, action_log, p_hat, q, counter)))


def most_likely_state(s_known: int, action_log: Sequence[int], p_hat, num_states: int) -> int:
    b = propagate_log(s_known, action_log, p_hat, num_states)
    if b.mass < MASS_FLOOR:
        b = uniform(num_states)
    return int(np.argmax(b.probs))


def most_likely_state_action(s_known: int, action_log: Sequence[int], p_hat, q: np.ndarray) -> int:
    """Greedy action for the single most probable current state."""
    s_star = most_likely_state(s_known, action_log, p_hat, q.shape[0])
    return int(np.argmax(q[s_star]))
