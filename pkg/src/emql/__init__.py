"""Expectation-maximisation Q-learning for MDPs with delayed state observations."""

from .agents import DqAgent, EmdpAgent, EmqlAgent, MbsAgent, make_agent
from .belief import Belief, get_emql_action, one_hot, propagate
from .channel import Channel, DelayModel, DelayedObservation, sample_delay
from .envs import CartPole, Discretizer, FrozenLake
from .errors import ConfigError
from .mdp import MdpSpec, SparseTabularModel, TabularModel, TrueMdp, greedy_action

__version__ = "0.1.0"

__all__ = [
    "Belief",
    "CartPole",
    "Channel",
    "ConfigError",
    "DelayModel",
    "DelayedObservation",
    "Discretizer",
    "DqAgent",
    "EmdpAgent",
    "EmqlAgent",
    "FrozenLake",
    "MbsAgent",
    "MdpSpec",
    "SparseTabularModel",
    "TabularModel",
    "TrueMdp",
    "get_emql_action",
    "greedy_action",
    "make_agent",
    "one_hot",
    "propagate",
    "sample_delay",
]
