"""Frozen Lake 8x8 and a discretised cart-pole, both with integer state ids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LEFT, DOWN, RIGHT, UP = 0, 1, 2, 3
_MOVES = {LEFT: (0, -1), DOWN: (1, 0), RIGHT: (0, 1), UP: (-1, 0)}

MAP_8X8 = (
    "SFFFFFFF",
    "FFFFFFFF",
    "FFFHFFFF",
    "FFFFFHFF",
    "FFFHFFFF",
    "FHHFFFHF",
    "FHFFHFHF",
    "FFFHFFFG",
)


@dataclass
class EnvStep:
    next_state: int
    reward: float
    done: bool


def read_map(path) -> tuple[str, ...]:
    """Read a grid file: one row of ``S``/``F``/``H``/``G`` characters per line."""
    rows = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return tuple(rows)


class FrozenLake:
    num_actions = 4
    r_max = 1.0

    def __init__(self, grid=MAP_8X8, slippery: bool = True):
        grid = tuple(grid)
        if len({len(row) for row in grid}) != 1:
            raise ValueError("grid rows must have equal length")
        if not set("".join(grid)) <= set("SFHG"):
            raise ValueError("grid cells must be one of S, F, H, G")
        if "".join(grid).count("S") != 1:
            raise ValueError("grid needs exactly one start cell")
        self.grid = grid
        self.nrow, self.ncol = len(grid), len(grid[0])
        self.slippery = slippery
        flat = "".join(grid)
        self.start = flat.index("S")
        self.terminal = np.array([c in "HG" for c in flat])
        self.current = self.start
        self.done = False

    @property
    def num_states(self) -> int:
        return self.nrow * self.ncol

    def cell(self, s: int) -> str:
        return self.grid[s // self.ncol][s % self.ncol]

    def move(self, s: int, direction: int) -> int:
        """Neighbour of ``s`` in ``direction``; walls clamp."""
        row, col = divmod(s, self.ncol)
        dr, dc = _MOVES[direction]
        row = min(max(row + dr, 0), self.nrow - 1)
        col = min(max(col + dc, 0), self.ncol - 1)
        return row * self.ncol + col

    def reset(self, rng: np.random.Generator | None = None) -> int:
        self.current = self.start
        self.done = False
        return self.current

    def step(self, a: int, rng: np.random.Generator) -> EnvStep:
        if self.done:
            raise RuntimeError("step called on a finished episode; reset first")
        if not 0 <= a < 4:
            raise IndexError(f"action {a} outside [0, 4)")
        direction = a
        if self.slippery:
            direction = ((a - 1) % 4, a, (a + 1) % 4)[rng.integers(3)]
        s = self.move(self.current, direction)
        self.current = s
        kind = self.cell(s)
        self.done = kind in "HG"
        return EnvStep(s, 1.0 if kind == "G" else 0.0, self.done)

    def transition_table(self) -> np.ndarray:
        """Exact ``(S, A, S)`` dynamics, terminal cells absorbing."""
        S = self.num_states
        p = np.zeros((S, 4, S))
        for s in range(S):
            for a in range(4):
                if self.terminal[s]:
                    p[s, a, s] = 1.0
                    continue
                dirs = ((a - 1) % 4, a, (a + 1) % 4) if self.slippery else (a,)
                for d in dirs:
                    p[s, a, self.move(s, d)] += 1.0 / len(dirs)
        return p

    def reward_table(self) -> np.ndarray:
        """Expected reward for each ``(s, a)``: probability of landing on the goal."""
        goal = np.array([c == "G" for c in "".join(self.grid)], dtype=float)
        r = self.transition_table() @ goal
        r[self.terminal] = 0.0
        return r


@dataclass
class CartPoleParams:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force: float = 10.0
    tau: float = 0.02
    x_threshold: float = 2.4
    theta_threshold: float = 12 * 2 * math.pi / 360


def cartpole_derivatives(state, force, prm: CartPoleParams):
    """Accelerations of the classic cart-pole with a massless-rod pivot model."""
    x, x_dot, theta, theta_dot = state
    total_mass = prm.cart_mass + prm.pole_mass
    polemass_length = prm.pole_mass * prm.half_length
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    temp = (force + polemass_length * theta_dot**2 * sin_t) / total_mass
    theta_acc = (prm.gravity * sin_t - cos_t * temp) / (
        prm.half_length * (4.0 / 3.0 - prm.pole_mass * cos_t**2 / total_mass)
    )
    x_acc = temp - polemass_length * theta_acc * cos_t / total_mass
    return x_acc, theta_acc


@dataclass
class Discretizer:
    """Uniform bins per dimension with clipping, combined by mixed radix."""

    lows: tuple
    highs: tuple
    bins: tuple
    edges: list = field(init=False)

    def __post_init__(self):
        if not len(self.lows) == len(self.highs) == len(self.bins):
            raise ValueError("lows, highs and bins must have equal length")
        # Interior edges only: n bins need n - 1 cut points.
        self.edges = [
            np.linspace(lo, hi, n + 1)[1:-1] for lo, hi, n in zip(self.lows, self.highs, self.bins)
        ]

    @property
    def total_states(self) -> int:
        return int(np.prod(self.bins))

    def bin_indices(self, physical) -> tuple[int, ...]:
        return tuple(
            int(np.searchsorted(edges, x, side="right")) for edges, x in zip(self.edges, physical)
        )

    def encode(self, indices) -> int:
        code = 0
        for i, n in zip(indices, self.bins):
            if not 0 <= i < n:
                raise IndexError(f"bin index {i} outside [0, {n})")
            code = code * n + int(i)
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        out = []
        for n in reversed(self.bins):
            code, i = divmod(code, n)
            out.append(i)
        return tuple(reversed(out))

    def discretize(self, physical) -> int:
        return self.encode(self.bin_indices(physical))


def default_discretizer() -> Discretizer:
    deg12 = 12 * math.pi / 180
    return Discretizer(
        lows=(-2.4, -3.0, -deg12, -3.5),
        highs=(2.4, 3.0, deg12, 3.5),
        bins=(6, 6, 12, 12),
    )


class CartPole:
    """Cart-pole balanced by left/right pushes, observed through a discretiser.

    Terminal physical states map to one extra absorbing id,
    ``discretizer.total_states``, so tabular learners never bootstrap from
    a fallen pole.
    """

    num_actions = 2
    r_max = 1.0

    def __init__(self, params: CartPoleParams | None = None, discretizer: Discretizer | None = None):
        self.params = params or CartPoleParams()
        self.discretizer = discretizer or default_discretizer()
        self.physical = np.zeros(4)
        self.done = False

    @property
    def num_states(self) -> int:
        return self.discretizer.total_states + 1

    @property
    def fallen_state(self) -> int:
        return self.discretizer.total_states

    def observe(self) -> int:
        return self.fallen_state if self.done else self.discretizer.discretize(self.physical)

    def reset(self, rng: np.random.Generator) -> int:
        self.physical = rng.uniform(-0.05, 0.05, size=4)
        self.done = False
        return self.observe()

    def step(self, a: int, rng: np.random.Generator | None = None) -> EnvStep:
        if self.done:
            raise RuntimeError("step called on a finished episode; reset first")
        if a not in (0, 1):
            raise IndexError(f"action {a} outside [0, 2)")
        prm = self.params
        force = prm.force if a == 1 else -prm.force
        x, x_dot, theta, theta_dot = (float(v) for v in self.physical)
        x_acc, theta_acc = cartpole_derivatives((x, x_dot, theta, theta_dot), force, prm)
        new = np.array([
            x + prm.tau * x_dot,
            x_dot + prm.tau * x_acc,
            theta + prm.tau * theta_dot,
            theta_dot + prm.tau * theta_acc,
        ])
        if not np.all(np.isfinite(new)):
            raise FloatingPointError(f"cart-pole state became non-finite: {new}")
        self.physical = new
        self.done = bool(abs(new[0]) > prm.x_threshold or abs(new[2]) > prm.theta_threshold)
        return EnvStep(self.observe(), 1.0, self.done)


def make_env(name: str, **options):
    if name == "frozen_lake":
        grid = options.pop("map_file", None)
        if grid is not None:
            options["grid"] = read_map(grid)
        return FrozenLake(**options)
    if name == "cart_pole":
        params = CartPoleParams(**{k: v for k, v in options.items() if k in CartPoleParams.__dataclass_fields__})
        disc = options.get("discretizer")
        return CartPole(params, disc)
    raise ValueError(f"unknown environment {name!r}")
