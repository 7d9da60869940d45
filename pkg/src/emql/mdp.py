"""Finite MDPs, count-based model estimates and synchronous value sweeps.

Two model containers share one interface:

* :class:`TabularModel` keeps every table dense, ``(S, A, S)`` for the
  transition counts. Used whenever the table fits comfortably in memory.
* :class:`SparseTabularModel` keeps transition counts in a dict and builds
  one CSR matrix per action on refresh. Used for large discretised or
  augmented state spaces.

Both expose ``transition_matrix(a)`` returning the ``(S, S)`` estimate for
one action, which is all the belief code needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np
from scipy import sparse

FORMAT_VERSION = 1

# Above this many (s, a, s') cells the sparse container is used.
DENSE_CELL_LIMIT = 4_000_000


@dataclass(frozen=True)
class MdpSpec:
    num_states: int
    num_actions: int
    gamma: float = 0.95
    r_max: float = 1.0

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1:
            raise ValueError(
                f"need at least one state and one action, got "
                f"|S|={self.num_states}, |A|={self.num_actions}"
            )
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")


@dataclass
class TrueMdp:
    """Known dynamics: ``transition[s, a, s']`` and expected ``reward[s, a]``.

    Terminal states are absorbing with zero reward; :meth:`__post_init__`
    rewrites their rows so callers only need to flag them.
    """

    spec: MdpSpec
    transition: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray = None

    def __post_init__(self):
        S, A = self.spec.num_states, self.spec.num_actions
        self.transition = np.array(self.transition, dtype=float)
        self.reward = np.array(self.reward, dtype=float)
        if self.terminal is None:
            self.terminal = np.zeros(S, dtype=bool)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        if self.transition.shape != (S, A, S) or self.reward.shape != (S, A):
            raise ValueError("transition/reward shapes do not match the spec")
        for s in np.flatnonzero(self.terminal):
            self.transition[s] = 0.0
            self.transition[s, :, s] = 1.0
            self.reward[s] = 0.0
        if np.any(self.transition < 0) or np.any(self.transition > 1):
            raise ValueError("transition entries must lie in [0, 1]")
        if not np.allclose(self.transition.sum(axis=2), 1.0, rtol=0, atol=1e-12):
            raise ValueError("transition rows must sum to 1")
        if np.any(self.reward > self.spec.r_max + 1e-12):
            raise ValueError("reward exceeds r_max")

    def step(self, s: int, a: int, rng: np.random.Generator) -> int:
        return int(rng.choice(self.spec.num_states, p=self.transition[s, a]))


def random_mdp(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    gamma: float = 0.9,
    r_max: float = 1.0,
    deterministic: bool = False,
) -> TrueMdp:
    """Draw a random MDP with rewards in ``[0, r_max]``."""
    S, A = num_states, num_actions
    if deterministic:
        transition = np.zeros((S, A, S))
        nxt = rng.integers(S, size=(S, A))
        for s in range(S):
            for a in range(A):
                transition[s, a, nxt[s, a]] = 1.0
    else:
        transition = rng.dirichlet(np.full(S, 0.5), size=(S, A))
        # Dirichlet draws can miss 1 by a few ulps.
        transition /= transition.sum(axis=2, keepdims=True)
    reward = rng.uniform(0.0, r_max, size=(S, A))
    return TrueMdp(MdpSpec(S, A, gamma, r_max), transition, reward)


def row_max(q: np.ndarray) -> np.ndarray:
    """``q.max(axis=1)``; folding over columns is much faster for few actions."""
    return reduce(np.maximum, q.T)


class _ModelBase:
    """Shared counting/planning logic; subclasses own transition storage."""

    def __init__(self, spec: MdpSpec):
        S, A = spec.num_states, spec.num_actions
        self.spec = spec
        self.visit_counts = np.zeros((S, A), dtype=np.int64)
        self.reward_sums = np.zeros((S, A))
        self.r_hat = np.zeros((S, A))
        self.q = np.zeros((S, A))
        self.v = np.zeros(S)

    @property
    def num_states(self) -> int:
        return self.spec.num_states

    @property
    def num_actions(self) -> int:
        return self.spec.num_actions

    def _check(self, s, a, s_next):
        S, A = self.spec.num_states, self.spec.num_actions
        if not (0 <= s < S and 0 <= s_next < S and 0 <= a < A):
            raise IndexError(
                f"transition ({s}, {a}, {s_next}) outside |S|={S}, |A|={A}"
            )

    def record_transition(self, s: int, a: int, s_next: int, r: float) -> "_ModelBase":
        self._check(s, a, s_next)
        self.visit_counts[s, a] += 1
        self.reward_sums[s, a] += r
        self._count_next(s, a, s_next)
        return self

    def refresh_estimates(self) -> "_ModelBase":
        denom = np.maximum(1, self.visit_counts)
        self.r_hat = self.reward_sums / denom
        self._refresh_transitions(denom)
        return self

    def q_sweep(self) -> "_ModelBase":
        """One synchronous backup ``q <- r_hat + gamma * p_hat @ max_a q``."""
        v_old = row_max(self.q)
        self.q = self.r_hat + self.spec.gamma * self._expected_next(v_old)
        self.v = row_max(self.q)
        return self

    def value_iteration(self, tol: float = 1e-8, max_sweeps: int = 1000) -> "PlanResult":
        """Sweep until the Bellman residual of ``q`` is certified below ``tol``.

        After a sweep ``q_new = T q_old`` the residual ``|T q_new - q_new|``
        is bounded by ``gamma * |q_new - q_old|``; that bound is the stopping
        quantity, so a myopic (``gamma = 0``) model stops after one sweep.
        """
        if tol <= 0:
            raise ValueError("tol must be positive")
        residual = np.inf
        sweeps = 0
        while sweeps < max_sweeps:
            q_old = self.q
            self.q_sweep()
            sweeps += 1
            residual = self.spec.gamma * float(np.max(np.abs(self.q - q_old)))
            if residual < tol:
                break
        return PlanResult(sweeps=sweeps, residual=residual, converged=residual < tol)

    def plan(self, mode: str = "sweep") -> "_ModelBase":
        """Episode-boundary refresh: estimates, then one sweep or a full solve."""
        self.refresh_estimates()
        if mode == "sweep":
            self.q_sweep()
        elif mode == "converge":
            self.value_iteration(tol=1e-8, max_sweeps=1000)
        else:
            raise ValueError(f"unknown planner mode {mode!r}")
        return self


@dataclass
class PlanResult:
    sweeps: int
    residual: float
    converged: bool


class TabularModel(_ModelBase):
    """Dense count tables ``N``, ``P``, ``R`` and the derived estimates."""

    def __init__(self, spec: MdpSpec):
        super().__init__(spec)
        S, A = spec.num_states, spec.num_actions
        self.transition_counts = np.zeros((S, A, S), dtype=np.int64)
        self.p_hat = np.zeros((S, A, S))

    def _count_next(self, s, a, s_next):
        self.transition_counts[s, a, s_next] += 1

    def _refresh_transitions(self, denom):
        self.p_hat = self.transition_counts / denom[:, :, None]

    def _expected_next(self, v):
        return self.p_hat @ v

    def transition_matrix(self, a: int) -> np.ndarray:
        return self.p_hat[:, a, :]

    # -- checkpointing ------------------------------------------------------

    def save(self, path) -> None:
        """Write a versioned plain-text checkpoint that round-trips exactly."""
        S, A = self.spec.num_states, self.spec.num_actions
        lines = [
            f"tabular-model v{FORMAT_VERSION}",
            f"{S} {A} {self.spec.gamma!r} {self.spec.r_max!r}",
        ]
        tables = [
            ("visit_counts", self.visit_counts, int),
            ("transition_counts", self.transition_counts, int),
            ("reward_sums", self.reward_sums, float),
            ("p_hat", self.p_hat, float),
            ("r_hat", self.r_hat, float),
            ("q", self.q, float),
            ("v", self.v, float),
        ]
        for name, arr, kind in tables:
            flat = arr.ravel(order="C")
            lines.append(f"{name} {flat.size}")
            lines.append(" ".join(repr(kind(x)) for x in flat))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "TabularModel":
        lines = Path(path).read_text().splitlines()
        if lines[0] != f"tabular-model v{FORMAT_VERSION}":
            raise ValueError(f"unsupported checkpoint header {lines[0]!r}")
        S, A, gamma, r_max = lines[1].split()
        model = cls(MdpSpec(int(S), int(A), float(gamma), float(r_max)))
        body = iter(lines[2:])
        for name_line in body:
            name, size = name_line.split()
            values = next(body).split()
            if len(values) != int(size):
                raise ValueError(f"table {name} has {len(values)} values, expected {size}")
            current = getattr(model, name)
            dtype = current.dtype
            parse = int if np.issubdtype(dtype, np.integer) else float
            arr = np.array([parse(x) for x in values], dtype=dtype).reshape(current.shape)
            setattr(model, name, arr)
        return model


class SparseTabularModel(_ModelBase):
    """Same contract as :class:`TabularModel` with sparse next-state counts.

    Counts live in growable coordinate arrays indexed through a dict. A
    refresh builds one stacked CSR matrix with row ``s * A + a``; the
    per-action ``(S, S)`` matrices are cut from it only when asked for.
    """

    def __init__(self, spec: MdpSpec):
        super().__init__(spec)
        self._index: dict[tuple[int, int, int], int] = {}
        self._rows = np.zeros(1024, dtype=np.int64)
        self._cols = np.zeros(1024, dtype=np.int64)
        self._cnt = np.zeros(1024, dtype=np.int64)
        S, A = spec.num_states, spec.num_actions
        self._stacked = sparse.csr_matrix((S * A, S))
        self._p_by_action = None

    def _count_next(self, s, a, s_next):
        key = (s, a, s_next)
        i = self._index.get(key)
        if i is None:
            i = len(self._index)
            if i == self._rows.size:
                for name in ("_rows", "_cols", "_cnt"):
                    arr = getattr(self, name)
                    setattr(self, name, np.concatenate([arr, np.zeros_like(arr)]))
            self._index[key] = i
            self._rows[i] = s * self.spec.num_actions + a
            self._cols[i] = s_next
        self._cnt[i] += 1

    def _refresh_transitions(self, denom):
        S, A = self.spec.num_states, self.spec.num_actions
        n = len(self._index)
        rows, cols = self._rows[:n], self._cols[:n]
        data = self._cnt[:n] / denom.ravel()[rows]
        self._stacked = sparse.csr_matrix((data, (rows, cols)), shape=(S * A, S))
        self._p_by_action = None

    def _expected_next(self, v):
        S, A = self.spec.num_states, self.spec.num_actions
        return (self._stacked @ v).reshape(S, A)

    def transition_matrix(self, a: int):
        if self._p_by_action is None:
            A = self.spec.num_actions
            self._p_by_action = [self._stacked[b::A] for b in range(A)]
        return self._p_by_action[a]

    @property
    def transition_counts(self) -> np.ndarray:
        S, A = self.spec.num_states, self.spec.num_actions
        out = np.zeros((S, A, S), dtype=np.int64)
        for (s, a, s2), i in self._index.items():
            out[s, a, s2] = self._cnt[i]
        return out

    @property
    def p_hat(self) -> np.ndarray:
        S, A = self.spec.num_states, self.spec.num_actions
        return self._stacked.toarray().reshape(S, A, S)


def make_model(spec: MdpSpec, sparse_storage: bool | None = None):
    """Pick dense storage unless the ``(S, A, S)`` table would be too large."""
    if sparse_storage is None:
        cells = spec.num_states * spec.num_actions * spec.num_states
        sparse_storage = cells > DENSE_CELL_LIMIT
    return SparseTabularModel(spec) if sparse_storage else TabularModel(spec)


def greedy_action(q: np.ndarray, s: int) -> int:
    """Argmax over ``q[s]``; ``np.argmax`` already returns the lowest tied index."""
    return int(np.argmax(q[s]))


# Free-function spellings of the model methods.

def record_transition(model, s, a, s_next, r):
    return model.record_transition(s, a, s_next, r)


def refresh_estimates(model):
    return model.refresh_estimates()


def q_sweep(model):
    return model.q_sweep()


def value_iteration(model, tol=1e-8, max_sweeps=1000):
    return model.value_iteration(tol, max_sweeps)
