"""Exact small-instance machinery for delayed MDPs.

Builds the augmented MDP explicitly, computes the conditional distribution
of the hidden current state by brute-force path enumeration, and checks
three properties numerically on known models:

* the augmented expected reward equals the conditional expectation of the
  true reward (two independent computations must agree),
* ``max_a E_mu[Q*(s, a)] >= E_mu[V*(s)] / |A|`` for non-negative rewards,
* the belief-weighted-Q* policy is worth at least
  ``E[V*(s) | s~] - R_max (1 - 1/|A|) / (1 - gamma)**2`` in every
  augmented state.

Every verifier works from true-model quantities, never from estimates.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import belief
from .agents import decode_augmented
from .mdp import MdpSpec, TrueMdp, random_mdp, row_max

SIZE_CAP = 10_000
ENUMERATION_LIMIT = 6


class AugmentedSizeError(ValueError):
    pass


@dataclass
class AugmentedMdp:
    spec: MdpSpec
    transition: np.ndarray  # (S~, A, S~)
    reward: np.ndarray  # (S~, A), from the tail-shift recursion
    conditionals: np.ndarray  # (S~, S): P(s_t = s | s~)
    d: int
    base: TrueMdp

    def decode(self, code: int):
        return decode_augmented(code, self.spec.num_actions, self.d)

    def as_true_mdp(self) -> TrueMdp:
        return TrueMdp(self.spec, self.transition, self.reward)


def conditional_table(m: TrueMdp, d: int) -> np.ndarray:
    """``P(s_t | s_{t-d}, a_{t-d..t-1})`` for every augmented code, by tail-shift recursion.

    Peels the oldest action off the tail: the distribution for
    ``(s, a1, ..., ad)`` is the ``p(s, a1, .)``-mixture of the
    distributions for ``(s', a2, ..., ad)``. Rows are indexed by augmented
    code, so the table for tail length ``k`` is built from the one for
    ``k - 1`` with one block matrix product per leading action.
    """
    S, A = m.spec.num_states, m.spec.num_actions
    table = np.eye(S)  # tail length 0: rows indexed by base state
    for k in range(1, d + 1):
        shorter = table.reshape(S, A ** (k - 1), S)
        # new[s, a1, rest] = sum_s' p(s, a1, s') * shorter[s', rest]
        new = np.einsum("sax,xrt->sart", m.transition, shorter)
        table = new.reshape(S * A**k, S)
    return table


def build_augmented(m: TrueMdp, d: int, size_cap: int = SIZE_CAP) -> AugmentedMdp:
    """Explicit delay-``d`` augmented MDP of ``m``.

    From code ``(s, a1, ..., ad)`` under action ``a`` the next base state is
    drawn from ``p(s, a1, .)`` and the tail shifts to ``(a2, ..., ad, a)``.
    """
    if d < 0:
        raise ValueError("delay must be non-negative")
    S, A = m.spec.num_states, m.spec.num_actions
    n_aug = S * A**d
    if n_aug > size_cap:
        raise AugmentedSizeError(
            f"augmented MDP needs |S|*|A|^d = {S}*{A}^{d} = {n_aug} states, cap is {size_cap}"
        )
    transition = np.zeros((n_aug, A, n_aug))
    tail_count = A**d
    for code in range(n_aug):
        s, tail = divmod(code, tail_count)
        if d == 0:
            for a in range(A):
                transition[code, a, :] = m.transition[s, a]
            continue
        oldest = tail // A ** (d - 1)
        shifted = tail % A ** (d - 1)
        for a in range(A):
            new_tail = shifted * A + a
            targets = np.arange(S) * tail_count + new_tail
            transition[code, a, targets] = m.transition[s, oldest]
    conditionals = conditional_table(m, d)
    reward = conditionals @ m.reward
    spec = MdpSpec(n_aug, A, m.spec.gamma, m.spec.r_max)
    return AugmentedMdp(spec, transition, reward, conditionals, d, m)


def conditional_distribution(m: TrueMdp, s0: int, log: Sequence[int]) -> np.ndarray:
    """Distribution of the state after ``log`` starting from ``s0``, summed over every path."""
    d = len(log)
    if d > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to logs of length {ENUMERATION_LIMIT}, got {d}")
    S = m.spec.num_states
    p = m.transition
    out = np.zeros(S)
    if d == 0:
        out[s0] = 1.0
        return out
    for path in itertools.product(range(S), repeat=d):
        prob = 1.0
        prev = s0
        for a, s in zip(log, path):
            prob *= p[prev, a, s]
            if prob == 0.0:
                break
            prev = s
        out[path[-1]] += prob
    return out


def enumerated_augmented_reward(m: TrueMdp, d: int) -> np.ndarray:
    """``r~(s~, a) = sum_s r(s, a) P(s | s~)`` with the conditional from path enumeration."""
    S, A = m.spec.num_states, m.spec.num_actions
    out = np.zeros((S * A**d, A))
    for code in range(S * A**d):
        s0, tail = decode_augmented(code, A, d)
        cond = conditional_distribution(m, s0, tail)
        for a in range(A):
            out[code, a] = sum(cond[s] * m.reward[s, a] for s in range(S))
    return out


def optimal_values(m: TrueMdp, tol: float = 1e-10, max_sweeps: int = 100_000):
    """Value iteration on a known model; returns ``(q_star, v_star)``.

    Stops once ``gamma * max|q_new - q_old|``, a bound on the Bellman
    residual of ``q_new``, drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gamma = m.spec.gamma
    reward, transition = m.reward, m.transition
    q = np.zeros_like(reward)
    v = row_max(q)
    for _ in range(max_sweeps):
        q_new = reward + gamma * (transition @ v)
        delta = np.abs(q_new - q).max()
        q = q_new
        v = row_max(q)
        if gamma * delta < tol:
            break
    return q, v


def bellman_residual(m: TrueMdp, q: np.ndarray) -> float:
    backed = m.reward + m.spec.gamma * (m.transition @ q.max(axis=1))
    return float(np.max(np.abs(backed - q)))


def evaluate_policy_on_augmented(am: AugmentedMdp, policy, tol: float = 1e-11, max_sweeps: int = 100_000) -> np.ndarray:
    """Fixed-point iteration of ``V(s~) = r~(s~, pi) + gamma * sum V(s~') p~(s~, pi, s~')``."""
    policy = np.asarray(policy, dtype=int)
    if policy.shape != (am.spec.num_states,):
        raise ValueError("policy must give one action per augmented state")
    idx = np.arange(am.spec.num_states)
    r_pi = am.reward[idx, policy]
    p_pi = am.transition[idx, policy, :]
    gamma = am.spec.gamma
    v = np.zeros(am.spec.num_states)
    for _ in range(max_sweeps):
        v_new = r_pi + gamma * (p_pi @ v)
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if gamma * delta < tol:
            break
    return v


def policy_residual(am: AugmentedMdp, policy, v) -> float:
    idx = np.arange(am.spec.num_states)
    policy = np.asarray(policy, dtype=int)
    backed = am.reward[idx, policy] + am.spec.gamma * (am.transition[idx, policy, :] @ v)
    return float(np.max(np.abs(backed - v)))


ORACLE_POLICIES = ("emql", "mbs", "memoryless", "myopic")


def oracle_policy(am: AugmentedMdp, q_star: np.ndarray, kind: str = "emql") -> np.ndarray:
    """Deterministic augmented-state policy built from true-model quantities.

    ``emql``        argmax_a E[Q*(s, a) | s~]
    ``mbs``         argmax_a Q*(most likely s, a)
    ``memoryless``  argmax_a Q*(s_{t-d}, a), ignoring the tail
    ``myopic``      argmax_a E[r(s, a) | s~]
    """
    cond = am.conditionals
    if kind == "emql":
        return np.argmax(cond @ q_star, axis=1)
    if kind == "mbs":
        return np.argmax(q_star[np.argmax(cond, axis=1)], axis=1)
    if kind == "memoryless":
        bases = np.arange(am.spec.num_states) // am.spec.num_actions**am.d
        return np.argmax(q_star[bases], axis=1)
    if kind == "myopic":
        return np.argmax(cond @ am.base.reward, axis=1)
    raise ValueError(f"unknown oracle policy {kind!r}; expected one of {ORACLE_POLICIES}")


@dataclass
class Lemma3Report:
    lhs: float
    rhs: float
    slack: float
    ok: bool


def check_lemma3(q_star: np.ndarray, v_star: np.ndarray, mu: np.ndarray, atol: float = 1e-10) -> Lemma3Report:
    """``max_a sum_s mu(s) Q*(s, a) >= (1/|A|) sum_s mu(s) V*(s)``."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or not np.isclose(mu.sum(), 1.0, atol=1e-12):
        raise ValueError("mu must be a probability vector")
    lhs = float(np.max(mu @ q_star))
    rhs = float(mu @ v_star) / q_star.shape[1]
    return Lemma3Report(lhs, rhs, lhs - rhs, lhs >= rhs - atol)


@dataclass
class Theorem1Report:
    num_augmented: int
    bound_term: float
    worst_slack: float
    violations: int
    ok: bool


def theorem1_bound_term(spec: MdpSpec) -> float:
    return spec.r_max * (1.0 - 1.0 / spec.num_actions) / (1.0 - spec.gamma) ** 2


def check_theorem1(m: TrueMdp, d: int, tol: float = 1e-11, atol: float = 1e-8, size_cap: int = SIZE_CAP) -> Theorem1Report:
    """Evaluate the belief-weighted-Q* policy exactly and test the lower bound in every augmented state."""
    am = build_augmented(m, d, size_cap)
    q_star, v_star = optimal_values(m, tol)
    policy = oracle_policy(am, q_star, "emql")
    v_tilde = evaluate_policy_on_augmented(am, policy, tol)
    expected_v = am.conditionals @ v_star
    bound = theorem1_bound_term(m.spec)
    slack = v_tilde - (expected_v - bound)
    violations = int(np.sum(slack < -atol))
    return Theorem1Report(am.spec.num_states, bound, float(slack.min()), violations, violations == 0)


# -- randomised suites ---------------------------------------------------------


def _instance_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, i])


def belief_suite(n: int = 200, seed: int = 0, atol: float = 1e-10) -> list[dict]:
    """Repeated ``belief.propagate`` of a one-hot versus path enumeration."""
    rows = []
    for i in range(n):
        rng = _instance_rng(seed, i)
        S, A, d = int(rng.integers(1, 7)), int(rng.integers(1, 4)), int(rng.integers(0, 5))
        m = random_mdp(rng, S, A)
        s0 = int(rng.integers(S))
        log = [int(a) for a in rng.integers(A, size=d)]
        propagated = belief.propagate_log(s0, log, m.transition, S).probs
        enumerated = conditional_distribution(m, s0, log)
        err = float(np.max(np.abs(propagated - enumerated)))
        rows.append(dict(seed=seed, instance=i, S=S, A=A, d=d, max_error=err, ok=err <= atol))
    return rows


def lemma1_suite(n: int = 200, seed: int = 0, atol: float = 1e-12) -> list[dict]:
    """Augmented reward via tail-shift recursion versus via enumerated conditionals."""
    rows = []
    for i in range(n):
        rng = _instance_rng(seed, i)
        S, A, d = int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
        m = random_mdp(rng, S, A)
        am = build_augmented(m, d)
        err = float(np.max(np.abs(am.reward - enumerated_augmented_reward(m, d))))
        rows.append(dict(seed=seed, instance=i, S=S, A=A, d=d, max_error=err, ok=err <= atol))
    return rows


def lemma3_suite(n: int = 1000, seed: int = 0, atol: float = 1e-10) -> list[dict]:
    rows = []
    for i in range(n):
        rng = _instance_rng(seed, i)
        S, A = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        gamma = float(rng.choice([0.5, 0.9, 0.95]))
        m = random_mdp(rng, S, A, gamma=gamma)
        q_star, v_star = optimal_values(m, 1e-11)
        mu = rng.dirichlet(np.ones(S))
        rep = check_lemma3(q_star, v_star, mu, atol)
        rows.append(dict(seed=seed, instance=i, S=S, A=A, gamma=gamma, lhs=rep.lhs, rhs=rep.rhs, slack=rep.slack, ok=rep.ok))
    return rows


def theorem1_suite(n: int = 500, seed: int = 0, atol: float = 1e-8) -> list[dict]:
    rows = []
    for i in range(n):
        rng = _instance_rng(seed, i)
        S, A, d = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
        gamma = float(rng.choice([0.5, 0.9]))
        deterministic = bool(rng.random() < 0.2)
        m = random_mdp(rng, S, A, gamma=gamma, deterministic=deterministic)
        rep = check_theorem1(m, d, atol=atol)
        row = dict(seed=seed, instance=i, S=S, A=A, d=d, gamma=gamma, deterministic=deterministic)
        row.update(asdict(rep))
        rows.append(row)
    return rows


SUITES = {
    "belief": belief_suite,
    "lemma1": lemma1_suite,
    "lemma3": lemma3_suite,
    "theorem1": theorem1_suite,
}


def run_all(seed: int = 0) -> dict[str, list[dict]]:
    return {name: fn(seed=seed) for name, fn in SUITES.items()}


def write_report(results: dict[str, list[dict]], path) -> dict:
    """Write every instance row plus a per-suite pass/fail summary as JSON."""
    summary = {
        name: dict(instances=len(rows), failures=sum(not r["ok"] for r in rows))
        for name, rows in results.items()
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dict(summary=summary, instances=results), indent=1))
    return summary
