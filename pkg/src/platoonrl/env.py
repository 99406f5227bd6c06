"""Discrete-time longitudinal platoon dynamics under a constant time-headway gap.

State of follower i is x = [e_p, e_v, acc]: gap-keeping error, velocity error
and own acceleration. The follower additionally observes its predecessor's
acceleration and control input, giving the 5-dimensional observation used by
every controller in this package. Forward Euler at interval dt throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import reward as reward_mod
from .config import PlatoonConfig, RewardWeights

OBS_DIM = 5
OBS_FIELDS = ("e_p", "e_v", "acc", "acc_pred", "u_pred")


@dataclass(frozen=True)
class LocalState:
    """Locally measurable state of one follower."""

    e_p: float   # gap-keeping error [m]
    e_v: float   # velocity error [m/s]
    acc: float   # acceleration [m/s^2]

    def as_array(self):
        return np.array([self.e_p, self.e_v, self.acc])


@dataclass(frozen=True)
class PredecessorSignal:
    """Signals received from the predecessor over the PF topology."""

    acc_pred: float  # predecessor acceleration [m/s^2]
    u_pred: float    # predecessor control input [m/s^2]


@dataclass(frozen=True)
class FollowerObservation:
    """Full controller input: local state plus predecessor signals."""

    local: LocalState
    pred: PredecessorSignal

    def as_array(self):
        return np.array([self.local.e_p, self.local.e_v, self.local.acc,
                         self.pred.acc_pred, self.pred.u_pred])

    @staticmethod
    def from_array(vec):
        e_p, e_v, acc, acc_pred, u_pred = (float(v) for v in vec)
        return FollowerObservation(LocalState(e_p, e_v, acc),
                                   PredecessorSignal(acc_pred, u_pred))


@dataclass(frozen=True, eq=False)
class DynamicsMatrices:
    """State-space form x' = A x + B u + C acc_pred of one vehicle."""

    A: np.ndarray  # 3x3
    B: np.ndarray  # 3
    C: np.ndarray  # 3


def build_matrices(config: PlatoonConfig, vehicle_index: int) -> DynamicsMatrices:
    """State matrices of vehicle ``vehicle_index`` (0 is the leader)."""
    dt = config.dt
    tau = config.tau[vehicle_index]
    ratio = dt / tau
    if vehicle_index == 0:
        A = np.zeros((3, 3))
        A[2, 2] = 1.0 - ratio
        C = np.zeros(3)
    else:
        h = config.time_gap[vehicle_index]
        A = np.array([[1.0, dt, -h * dt],
                      [0.0, 1.0, -dt],
                      [0.0, 0.0, 1.0 - ratio]])
        C = np.array([0.0, dt, 0.0])
    B = np.array([0.0, 0.0, ratio])
    return DynamicsMatrices(A=A, B=B, C=C)


def clamp_action(u: float, config: PlatoonConfig) -> float:
    """Clamp a control input to [u_min, u_max]; idempotent."""
    return min(max(float(u), config.u_min), config.u_max)


def clamp_acc(acc: float, config: PlatoonConfig) -> float:
    return min(max(float(acc), config.acc_min), config.acc_max)


def jerk(acc: float, u: float, tau: float) -> float:
    """Rate of change of acceleration implied by the driveline lag."""
    return (u - acc) / tau


def leader_step(acc: float, u: float, config: PlatoonConfig) -> float:
    """Advance the leader's acceleration one step (clamped)."""
    ratio = config.dt / config.tau[0]
    return clamp_acc((1.0 - ratio) * acc + ratio * u, config)


def follower_step(x: LocalState, u: float, acc_pred: float,
                  config: PlatoonConfig, vehicle_index: int) -> LocalState:
    """Advance one follower's error state; acceleration is clamped after."""
    if not all(map(math.isfinite, (x.e_p, x.e_v, x.acc, u, acc_pred))):
        raise ValueError("non-finite input to follower_step")
    e_p, e_v, acc = _follower_step_scalar(
        x.e_p, x.e_v, x.acc, u, acc_pred, config, vehicle_index)
    return LocalState(e_p, e_v, acc)


def _follower_step_scalar(e_p, e_v, acc, u, acc_pred, config, vehicle_index):
    # Componentwise expansion of x' = A x + B u + C acc_pred; kept free of
    # matrix products so the matrix form stays an independent test oracle.
    dt = config.dt
    h = config.time_gap[vehicle_index]
    ratio = dt / config.tau[vehicle_index]
    e_p2 = e_p + dt * e_v - h * dt * acc
    e_v2 = e_v - dt * acc + dt * acc_pred
    acc2 = (1.0 - ratio) * acc + ratio * u
    return e_p2, e_v2, clamp_acc(acc2, config)


def default_initial_states(config: PlatoonConfig):
    """Reference evaluation start: every follower at [e_p, e_v, acc] = [1.5, -1, 0]."""
    return [LocalState(1.5, -1.0, 0.0)] * config.n_followers


@dataclass
class EpisodeLog:
    """Per-step record of one follower over one episode (arrays of length K)."""

    follower: int
    e_p: np.ndarray
    e_v: np.ndarray
    acc: np.ndarray
    u: np.ndarray
    jerk: np.ndarray
    reward: np.ndarray
    headway: np.ndarray
    v: np.ndarray

    def __len__(self):
        return len(self.e_p)


def _apply_jerk_clip(u, acc, k, tau, clip):
    lo, hi, after = clip
    if k <= after:
        return u
    return min(max(u, acc + tau * lo), acc + tau * hi)


def platoon_rollout(policies, leader_trace, initial_states,
                    config: PlatoonConfig, weights: RewardWeights,
                    jerk_clip=None):
    """Roll the whole platoon for one episode and log every follower.

    ``policies`` holds one object per follower exposing ``action(k, obs)``
    with k in 1..K. Follower 1 receives the leader trace's (acc, u); each
    later follower receives the realized (acc, u) of its predecessor.
    ``jerk_clip`` is an optional (lo, hi, after_step) test-time action clip.
    Deterministic given its inputs.
    """
    K = config.horizon
    F = config.n_followers
    if len(policies) != F:
        raise ValueError(f"expected {F} policies, got {len(policies)}")
    if len(initial_states) != F:
        raise ValueError(f"expected {F} initial states, got {len(initial_states)}")
    v0 = np.asarray(leader_trace.v, dtype=float)
    acc0 = np.asarray(leader_trace.acc, dtype=float)
    u0 = np.asarray(leader_trace.u, dtype=float)
    if len(acc0) < K or len(u0) < K or len(v0) < K:
        raise ValueError(
            f"leader trace too short for horizon {K}: "
            f"v={len(v0)} acc={len(acc0)} u={len(u0)}")

    X = np.empty((F, 3))
    for i, s in enumerate(initial_states):
        X[i] = s.as_array() if isinstance(s, LocalState) else np.asarray(s, float)
    cols = {name: np.empty((F, K)) for name in
            ("e_p", "e_v", "acc", "u", "jerk", "reward", "headway", "v")}

    for t in range(K):
        k = t + 1
        us = np.empty(F)
        v = v0[t]
        for i in range(F):
            veh = i + 1
            tau = config.tau[veh]
            acc_pred = acc0[t] if i == 0 else X[i - 1, 2]
            u_pred = u0[t] if i == 0 else us[i - 1]
            obs = np.array([X[i, 0], X[i, 1], X[i, 2], acc_pred, u_pred])
            u = float(policies[i].action(k, obs))
            if not math.isfinite(u):
                raise ValueError(f"policy for follower {veh} returned non-finite action")
            if jerk_clip is not None:
                u = _apply_jerk_clip(u, X[i, 2], k, tau, jerk_clip)
            u = clamp_action(u, config)
            us[i] = u
            j = jerk(X[i, 2], u, tau)
            r = reward_mod.reward(X[i, 0], X[i, 1], u, j,
                                  config.acc_max, config.u_max, config.dt, weights)
            v = v - X[i, 1]  # own velocity from the predecessor's via e_v
            cols["e_p"][i, t] = X[i, 0]
            cols["e_v"][i, t] = X[i, 1]
            cols["acc"][i, t] = X[i, 2]
            cols["u"][i, t] = u
            cols["jerk"][i, t] = j
            cols["reward"][i, t] = r
            cols["v"][i, t] = v
            cols["headway"][i, t] = (X[i, 0] + config.standstill[veh]
                                     + config.time_gap[veh] * v)
        # simultaneous state update from the frozen step-t states
        acc_before = X[:, 2].copy()
        for i in range(F):
            acc_pred = acc0[t] if i == 0 else acc_before[i - 1]
            X[i] = _follower_step_scalar(X[i, 0], X[i, 1], X[i, 2],
                                         us[i], acc_pred, config, i + 1)

    return [EpisodeLog(follower=i + 1, **{n: cols[n][i] for n in cols})
            for i in range(F)]
