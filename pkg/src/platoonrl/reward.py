"""Branch-defined step reward, episode returns and the myopic terminal policy.

The step reward is a Huber-style cost: a normalized absolute-value branch
when errors are large, a scaled quadratic branch when they are small. Both
branches are non-positive; zero is attained only at the origin.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .config import PlatoonConfig, RewardWeights

MYOPIC_RESOLUTION = 1e-3  # action-grid spacing of the myopic search [m/s^2]


def reward(e_p, e_v, u, j, acc_max, u_max, dt, weights: RewardWeights):
    """Step reward. Scalar or elementwise over broadcastable arrays."""
    e_p = np.asarray(e_p, dtype=float)
    e_v = np.asarray(e_v, dtype=float)
    u = np.asarray(u, dtype=float)
    j = np.asarray(j, dtype=float)
    if not (np.all(np.isfinite(e_p)) and np.all(np.isfinite(e_v))
            and np.all(np.isfinite(u)) and np.all(np.isfinite(j))):
        raise ValueError("non-finite input to reward")
    w = weights
    r_abs = -(np.abs(e_p) / w.ep_nominal
              + w.ev_coef * np.abs(e_v) / w.ev_nominal
              + w.u_coef * np.abs(u) / u_max
              + w.jerk_coef * np.abs(j) / (2.0 * acc_max / dt))
    r_qua = -w.quad_scale * (e_p ** 2 + w.ev_coef * e_v ** 2
                             + w.u_coef * u ** 2 + w.jerk_coef * (j * dt) ** 2)
    out = np.where(r_abs < w.threshold, r_abs, r_qua)
    return float(out) if out.ndim == 0 else out


def episode_return(rewards, gamma: float) -> float:
    """Discounted sum of a reward sequence, first step undiscounted."""
    rewards = np.asarray(rewards, dtype=float)
    if len(rewards) == 0:
        return 0.0
    return float(rewards @ np.power(gamma, np.arange(len(rewards))))


@lru_cache(maxsize=8)
def _action_grid(u_min: float, u_max: float, resolution: float):
    n = int(round((u_max - u_min) / resolution))
    grid = np.linspace(u_min, u_max, n + 1)
    # search order: small |u| first, so argmax tie-breaks toward smaller |u|
    order = np.lexsort((grid, np.abs(grid)))
    return grid[order]


def myopic_action_batch(obs, config: PlatoonConfig, weights: RewardWeights,
                        vehicle: int = 1, resolution: float = MYOPIC_RESOLUTION):
    """Grid-search argmax of the immediate reward for a batch of observations."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    grid = _action_grid(config.u_min, config.u_max, resolution)
    acc = obs[:, 2:3]
    j = (grid[None, :] - acc) / config.tau[vehicle]
    r = reward(obs[:, 0:1], obs[:, 1:2], grid[None, :], j,
               config.acc_max, config.u_max, config.dt, weights)
    return grid[np.argmax(r, axis=1)]


def myopic_action(obs, config: PlatoonConfig, weights: RewardWeights,
                  vehicle: int = 1) -> float:
    """Action maximizing the immediate reward (ties toward smaller |u|)."""
    vec = obs.as_array() if hasattr(obs, "as_array") else np.asarray(obs, float)
    return float(myopic_action_batch(vec[None, :], config, weights, vehicle)[0])


def terminal_reward_batch(obs, config: PlatoonConfig, weights: RewardWeights,
                          vehicle: int = 1):
    """Reward of the myopic action at each observation (terminal-step value)."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    u = myopic_action_batch(obs, config, weights, vehicle)
    j = (u - obs[:, 2]) / config.tau[vehicle]
    return reward(obs[:, 0], obs[:, 1], u, j,
                  config.acc_max, config.u_max, config.dt, weights)
