"""Experiment configuration and its plain-text file format.

A config file is a list of ``section.key = value`` lines. Blank lines and
lines starting with ``#`` are ignored, values are bare (no quoting), and
lists are comma separated::

    env.name = frozen_lake
    env.slippery = true
    agent.kind = emql
    agent.gamma = 0.95
    delay.kind = geometric
    delay.p = 0.6667
    run.episodes = 1000
    run.iterations = 10
    run.seed = 0
    run.out = results/fl_geom

See ``KEYS`` for every accepted key and README.md for the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..agents import AGENT_KINDS
from ..channel import DelayModel
from ..errors import ConfigError

ENVS = ("frozen_lake", "cart_pole")
DEFAULT_ITERATIONS = {"frozen_lake": 50, "cart_pole": 20}
PLANNERS = ("sweep", "converge")


@dataclass
class ExperimentConfig:
    env: str = "frozen_lake"
    env_options: dict = field(default_factory=dict)
    agent: str = "emql"
    gamma: float = 0.95
    alpha: float = 0.1
    planner: str = "sweep"
    delay: DelayModel = field(default_factory=lambda: DelayModel.constant(2))
    episodes: int = 1000
    iterations: int | None = None
    base_seed: int = 0
    window: int = 50
    quantiles: tuple = (0.25, 0.75)
    cap: int = 200
    out_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.iterations is None:
            self.iterations = DEFAULT_ITERATIONS.get(self.env, 1)

    def validate(self) -> "ExperimentConfig":
        if self.env not in ENVS:
            raise ConfigError(f"env must be one of {ENVS}, got {self.env!r}")
        if self.agent not in AGENT_KINDS:
            raise ConfigError(f"agent must be one of {AGENT_KINDS}, got {self.agent!r}")
        if self.planner not in PLANNERS:
            raise ConfigError(f"planner must be one of {PLANNERS}, got {self.planner!r}")
        if self.agent == "emdp" and not self.delay.is_constant:
            raise ConfigError("emdp needs a constant delay; the augmented state is undefined for stochastic delays")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.iterations < 1:
            raise ConfigError("iterations must be at least 1")
        if self.window < 1 or self.episodes < self.window:
            raise ConfigError(f"need 1 <= window <= episodes, got window={self.window}, episodes={self.episodes}")
        lo, hi = self.quantiles
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError(f"quantiles must satisfy 0 <= low <= high <= 1, got {self.quantiles}")
        if self.cap < 1:
            raise ConfigError("episode cap must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        return self

    def with_agent(self, kind: str) -> "ExperimentConfig":
        return replace(self, agent=kind)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(","))


KEYS = {
    "env.name": str,
    "env.slippery": _bool,
    "env.map_file": str,
    "env.cap": int,
    "env.bins": _ints,
    "env.lows": _floats,
    "env.highs": _floats,
    "agent.kind": str,
    "agent.gamma": float,
    "agent.alpha": float,
    "agent.planner": str,
    "delay.kind": str,
    "delay.d": int,
    "delay.p": float,
    "run.episodes": int,
    "run.iterations": int,
    "run.seed": int,
    "run.window": int,
    "run.quantile_low": float,
    "run.quantile_high": float,
    "run.out": str,
    "run.workers": int,
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return values


def config_from_mapping(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay dotted-key ``values`` onto ``base`` (or the defaults)."""
    cfg = replace(base) if base is not None else ExperimentConfig()
    cfg.env_options = dict(cfg.env_options)
    env_changed = "env.name" in values
    if env_changed:
        cfg.env = values["env.name"]
    for key in ("slippery", "map_file", "bins", "lows", "highs"):
        if f"env.{key}" in values:
            cfg.env_options[key] = values[f"env.{key}"]
    if "env.cap" in values:
        cfg.cap = values["env.cap"]
    simple = {
        "agent.kind": "agent",
        "agent.gamma": "gamma",
        "agent.alpha": "alpha",
        "agent.planner": "planner",
        "run.episodes": "episodes",
        "run.seed": "base_seed",
        "run.window": "window",
        "run.out": "out_dir",
        "run.workers": "workers",
    }
    for key, attr in simple.items():
        if key in values:
            setattr(cfg, attr, values[key])
    if "run.iterations" in values:
        cfg.iterations = values["run.iterations"]
    elif env_changed and base is None:
        cfg.iterations = DEFAULT_ITERATIONS.get(cfg.env, 1)
    lo, hi = cfg.quantiles
    cfg.quantiles = (values.get("run.quantile_low", lo), values.get("run.quantile_high", hi))
    if any(k.startswith("delay.") for k in values):
        kind = values.get("delay.kind", cfg.delay.kind)
        try:
            if kind == "constant":
                cfg.delay = DelayModel.constant(values.get("delay.d", cfg.delay.d))
            else:
                cfg.delay = DelayModel(kind, p=values.get("delay.p", cfg.delay.p))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping(parse_config_text(text))
