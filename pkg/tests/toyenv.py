"""Tiny 1-D finite-horizon task with an exhaustive grid-DP oracle.

Dynamics x' = x + 0.5 u on x, u in [-1, 1]; step reward -(x^2 + 0.1 u^2);
the terminal step plays the myopic action u = 0. Small enough that backward
induction over a discretized state/action grid is exact for testing.
"""
import numpy as np

from platoonrl.config import PlatoonConfig, RewardWeights


class ToyEnv:
    """Implements the sweep-environment protocol used by the trainers."""

    def __init__(self, horizon=3):
        self.horizon = horizon
        self.action_bounds = (-1.0, 1.0)
        self.pconfig = PlatoonConfig(horizon=max(horizon, 2))
        self.weights = RewardWeights()
        self.vehicle = 1

    @staticmethod
    def reward(x, u):
        return -(x ** 2 + 0.1 * u ** 2)

    def draw(self, k, rng):
        return rng.uniform(-1.0, 1.0, size=1)

    def step(self, k, s, u, rng):
        x = float(s[0])
        return float(self.reward(x, u)), np.array([x + 0.5 * u])

    def terminal_value(self, s2):
        x = np.asarray(s2)[:, 0]
        return -(x ** 2)  # reward of the myopic terminal action u = 0


def grid_dp(env, du=0.1, x_span=1.6, nx=641):
    """Backward induction on a state/action grid; returns (xg, ug, policies).

    ``policies[k]`` maps each grid state to the optimal grid action for steps
    k = 1 .. horizon-1 (the terminal step is myopic by construction).
    """
    ug = np.round(np.arange(-1.0, 1.0 + du / 2, du), 10)
    xg = np.linspace(-x_span, x_span, nx)
    v_next = -(xg ** 2)  # terminal-step value (myopic action u = 0)
    policies = {}
    for k in range(env.horizon - 1, 0, -1):
        x2 = xg[:, None] + 0.5 * ug[None, :]
        q = env.reward(xg[:, None], ug[None, :]) + np.interp(
            np.clip(x2, -x_span, x_span), xg, v_next)
        policies[k] = ug[np.argmax(q, axis=1)]
        v_next = q.max(axis=1)
    return xg, ug, policies


def dp_policy_at(xg, policy, x):
    return policy[np.argmin(np.abs(xg - x))]
