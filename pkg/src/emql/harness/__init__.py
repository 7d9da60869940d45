from .config import ExperimentConfig, load_config, parse_config_text
from .output import emit_comparison, emit_outputs, read_episodes
from .runner import EpisodeLog, compare, moving_average, run_episode, run_experiment

__all__ = [
    "EpisodeLog",
    "ExperimentConfig",
    "compare",
    "emit_comparison",
    "emit_outputs",
    "load_config",
    "moving_average",
    "parse_config_text",
    "read_episodes",
    "run_episode",
    "run_experiment",
]
