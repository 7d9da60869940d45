"""Seeded episode loops through the delay channel, and cross-iteration statistics."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..agents import DelayedAgent, make_agent
from ..channel import Channel, DelayedObservation
from ..envs import CartPole, Discretizer, FrozenLake, default_discretizer, read_map
from .config import ExperimentConfig


@dataclass(frozen=True)
class EpisodeLog:
    iteration: int
    episode: int
    total_reward: float
    steps: int
    seed: int


@dataclass
class EpisodeOutcome:
    total_reward: float
    steps: int
    recorded: int
    actions: list


def build_env(cfg: ExperimentConfig):
    opts = cfg.env_options
    if cfg.env == "frozen_lake":
        kwargs = {"slippery": opts.get("slippery", True)}
        if opts.get("map_file"):
            kwargs["grid"] = read_map(opts["map_file"])
        return FrozenLake(**kwargs)
    disc = None
    if any(k in opts for k in ("bins", "lows", "highs")):
        base = default_discretizer()
        disc = Discretizer(
            lows=opts.get("lows", base.lows),
            highs=opts.get("highs", base.highs),
            bins=opts.get("bins", base.bins),
        )
    return CartPole(discretizer=disc)


def build_agent(cfg: ExperimentConfig, env) -> DelayedAgent:
    return make_agent(
        cfg.agent,
        env.num_states,
        env.num_actions,
        cfg.delay,
        gamma=cfg.gamma,
        r_max=env.r_max,
        alpha=cfg.alpha,
        planner=cfg.planner,
    )


def run_episode(
    env,
    agent: DelayedAgent,
    channel: Channel | None,
    env_rng: np.random.Generator,
    agent_rng: np.random.Generator,
    cap: int = 200,
) -> EpisodeOutcome:
    """Play one episode; without a channel every observation is delivered at once.

    The agent may act on stale information between arrivals. When the
    episode ends (terminal state or ``cap`` steps) the channel is flushed
    into the agent before the planner refresh.
    """
    s0 = env.reset(env_rng)
    agent.begin_episode(s0)
    recorded_before = agent.transitions_recorded
    total = 0.0
    t = 0
    actions = []
    while t < cap:
        a = agent.act(agent_rng)
        actions.append(a)
        step = env.step(a, env_rng)
        total += step.reward
        t += 1
        if channel is None:
            agent.ingest([DelayedObservation(t, step.next_state, step.reward, step.done, t)])
        else:
            channel.send(t, step.next_state, step.reward, step.done, now=t)
            agent.ingest(channel.poll(t))
        if step.done:
            break
    if channel is not None:
        agent.ingest(channel.flush())
    agent.end_episode()
    return EpisodeOutcome(total, t, agent.transitions_recorded - recorded_before, actions)


def iteration_streams(seed: int):
    """Independent generators for environment, exploration and delay sampling."""
    env_ss, agent_ss, delay_ss = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(env_ss), np.random.default_rng(agent_ss), np.random.default_rng(delay_ss)


def run_iteration(cfg: ExperimentConfig, iteration: int) -> list[EpisodeLog]:
    seed = cfg.base_seed + iteration
    env_rng, agent_rng, delay_rng = iteration_streams(seed)
    env = build_env(cfg)
    agent = build_agent(cfg, env)
    channel = Channel(cfg.delay, delay_rng)
    rows = []
    for e in range(cfg.episodes):
        out = run_episode(env, agent, channel, env_rng, agent_rng, cfg.cap)
        rows.append(EpisodeLog(iteration, e, out.total_reward, out.steps, seed))
    return rows


def _run_iteration_args(args):
    return run_iteration(*args)


def moving_average(rewards: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` episodes along the last axis.

    The first ``window - 1`` entries average over the episodes seen so far.
    """
    rewards = np.asarray(rewards, dtype=float)
    csum = np.cumsum(rewards, axis=-1)
    out = np.empty_like(csum)
    n = rewards.shape[-1]
    for e in range(n):
        lo = e - window
        out[..., e] = (csum[..., e] - (csum[..., lo] if lo >= 0 else 0.0)) / min(window, e + 1)
    return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    rewards: np.ndarray  # (iterations, episodes)
    moving: np.ndarray  # (iterations, episodes)
    median: np.ndarray
    q_low: np.ndarray
    q_high: np.ndarray

    @property
    def final_moving(self) -> np.ndarray:
        """Last-window mean reward of each iteration."""
        return self.moving[:, -1]


def summarize(cfg: ExperimentConfig, rows: list[EpisodeLog]) -> ExperimentResult:
    rewards = np.zeros((cfg.iterations, cfg.episodes))
    for r in rows:
        rewards[r.iteration, r.episode] = r.total_reward
    moving = moving_average(rewards, cfg.window)
    lo, hi = cfg.quantiles
    q_low, median, q_high = np.quantile(moving, [lo, 0.5, hi], axis=0)
    return ExperimentResult(cfg, rows, rewards, moving, median, q_low, q_high)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    jobs = [(cfg, i) for i in range(cfg.iterations)]
    if cfg.workers > 1 and cfg.iterations > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_iter = list(pool.map(_run_iteration_args, jobs))
    else:
        per_iter = [run_iteration(*job) for job in jobs]
    rows = sorted((r for it in per_iter for r in it), key=lambda r: (r.iteration, r.episode))
    return summarize(cfg, rows)


def compare(cfg: ExperimentConfig, agents) -> dict[str, ExperimentResult]:
    """Run the same experiment for several agents with matched seeds."""
    configs = {kind: cfg.with_agent(kind).validate() for kind in agents}
    return {kind: run_experiment(c) for kind, c in configs.items()}
