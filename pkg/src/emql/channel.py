"""Observation pipe with per-observation random delay.

Each observation is stamped with the step that produced it and scheduled
to arrive some number of steps later. Arrivals can overtake each other; a
poll hands back whatever has landed, sorted by timestamp.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DelayModel:
    """``constant`` delay of ``d`` steps, or ``geometric`` with parameter ``p``.

    The geometric delay takes values ``k >= 1`` with probability
    ``(1 - p) p**(k - 1)``, so its mean is ``1 / (1 - p)``.
    """

    kind: str
    d: int = 0
    p: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            if self.d < 0 or int(self.d) != self.d:
                raise ValueError(f"constant delay must be a non-negative integer, got {self.d}")
        elif self.kind == "geometric":
            if not 0.0 <= self.p < 1.0:
                raise ValueError(f"geometric parameter must lie in [0, 1), got {self.p}")
        else:
            raise ValueError(f"unknown delay kind {self.kind!r}")

    @classmethod
    def constant(cls, d: int) -> "DelayModel":
        return cls("constant", d=int(d))

    @classmethod
    def geometric(cls, p: float) -> "DelayModel":
        return cls("geometric", p=float(p))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def mean(self) -> float:
        return float(self.d) if self.is_constant else 1.0 / (1.0 - self.p)

    def __str__(self):
        return f"const{self.d}" if self.is_constant else f"geom{self.p:g}"


def sample_delay(model: DelayModel, rng: np.random.Generator) -> int:
    if model.is_constant:
        return model.d
    # numpy's geometric counts trials up to the first success, support k >= 1.
    return int(rng.geometric(1.0 - model.p))


@dataclass(frozen=True)
class DelayedObservation:
    timestamp: int
    state: int
    reward: float
    done: bool
    arrival: int


class Channel:
    def __init__(self, delay_model: DelayModel, rng: np.random.Generator):
        self.delay_model = delay_model
        self.rng = rng
        self._heap: list[tuple[int, int, DelayedObservation]] = []
        self._timestamps: set[int] = set()

    def __len__(self):
        return len(self._heap)

    def send(self, timestamp: int, state: int, reward: float, done: bool, now: int) -> DelayedObservation:
        if timestamp != now:
            raise ValueError(f"observation stamped {timestamp} sent at step {now}")
        if timestamp in self._timestamps:
            raise ValueError(f"timestamp {timestamp} already in flight")
        arrival = now + sample_delay(self.delay_model, self.rng)
        obs = DelayedObservation(timestamp, state, reward, done, arrival)
        heapq.heappush(self._heap, (arrival, timestamp, obs))
        self._timestamps.add(timestamp)
        return obs

    def poll(self, now: int) -> list[DelayedObservation]:
        out = []
        while self._heap and self._heap[0][0] <= now:
            out.append(heapq.heappop(self._heap)[2])
        for obs in out:
            self._timestamps.discard(obs.timestamp)
        out.sort(key=lambda o: o.timestamp)
        return out

    def flush(self) -> list[DelayedObservation]:
        out = sorted((item[2] for item in self._heap), key=lambda o: o.timestamp)
        self._heap.clear()
        self._timestamps.clear()
        return out
