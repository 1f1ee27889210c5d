"""Instruction-regularized reinforcement learning workbench."""

from .core import EnvConfig, EpisodeTrace, make_env, run_episode
from .hanabi import HanabiConfig, hanabi_config, mini_hanabi_config
from .language import INSTRUCTIONS, build_prompt, describe_action, describe_observation
from .prior import PriorTable, build_prior_table, corrupt_prior, prior_accuracy, prior_distribution
from .qlearn import TrainConfig, mini_hanabi_train_config, say_select_train_config, train_hanabi
from .fast_say_select import train_say_select_fast
from .say_select import say_select_config

__all__ = [
    "EnvConfig",
    "EpisodeTrace",
    "HanabiConfig",
    "INSTRUCTIONS",
    "PriorTable",
    "TrainConfig",
    "build_prompt",
    "build_prior_table",
    "corrupt_prior",
    "describe_action",
    "describe_observation",
    "hanabi_config",
    "make_env",
    "mini_hanabi_config",
    "mini_hanabi_train_config",
    "prior_accuracy",
    "prior_distribution",
    "run_episode",
    "say_select_config",
    "say_select_train_config",
    "train_hanabi",
    "train_say_select_fast",
]
