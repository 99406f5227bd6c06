"""Platoon-control simulator and finite-horizon actor-critic training stack."""

from .config import (ALGORITHMS, DdpgConfig, PlatoonConfig, RewardWeights,
                     RunConfig, SsConfig, load_config, save_config)
from .env import (DynamicsMatrices, EpisodeLog, FollowerObservation,
                  LocalState, PredecessorSignal, build_matrices, clamp_action,
                  default_initial_states, follower_step, leader_step,
                  platoon_rollout)
from .reward import episode_return, myopic_action

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "DdpgConfig", "DynamicsMatrices", "EpisodeLog",
    "FollowerObservation", "LocalState", "PlatoonConfig", "PredecessorSignal",
    "RewardWeights", "RunConfig", "SsConfig", "build_matrices", "clamp_action",
    "default_initial_states", "episode_return", "follower_step",
    "leader_step", "load_config", "myopic_action", "platoon_rollout",
    "save_config",
]
