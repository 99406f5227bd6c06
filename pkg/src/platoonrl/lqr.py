"""Finite-horizon discrete LQR with a state-input cross term.

Linearizes the follower control problem (quadratic reward branch, limits and
disturbances ignored) and runs the backward Riccati recursion. The step index
below which the feedback gains are effectively constant motivates replacing
the early per-step policies with a single stationary one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PlatoonConfig, RewardWeights
from .env import build_matrices


@dataclass(frozen=True, eq=False)
class LqrProblem:
    """min sum x'Qx + u R u + 2 x' N u subject to x' = A x + B u."""

    A: np.ndarray        # 3x3
    B: np.ndarray        # 3x1
    Q: np.ndarray        # 3x3 state cost
    R: float             # scalar input cost
    N_cross: np.ndarray  # 3x1 state-input cross cost
    horizon: int


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Feedback gains u_k = -gain_k' x_k and cost-to-go matrices P_k.

    ``gains[k]``/``P[k]`` are indexed by time step; gains cover 1..K-1 and
    P covers 1..K (P[K] is the terminal cost).
    """

    gains: dict
    P: dict
    horizon: int


def build_problem(config: PlatoonConfig, weights: RewardWeights,
                  vehicle: int = 1, horizon: int | None = None) -> LqrProblem:
    """Quadratic-branch cost written as (Q, R, N) blocks over x = [e_p, e_v, acc].

    The jerk term c*(j*dt)^2 with j = (u - acc)/tau expands into an acc^2
    state cost, a u^2 input cost and an acc*u cross term. The overall scale
    of the quadratic branch is dropped: it cannot change the gains.
    """
    mats = build_matrices(config, vehicle)
    ratio2 = (config.dt / config.tau[vehicle]) ** 2
    a, b, c = weights.ev_coef, weights.u_coef, weights.jerk_coef
    Q = np.diag([1.0, a, c * ratio2])
    R = b + c * ratio2
    N = np.array([[0.0], [0.0], [-c * ratio2]])
    return LqrProblem(A=mats.A, B=mats.B.reshape(3, 1), Q=Q, R=R, N_cross=N,
                      horizon=horizon or config.horizon)


def riccati_backward(problem: LqrProblem) -> GainSchedule:
    """Backward Riccati recursion with cross terms; terminal cost P_K = Q."""
    A, B, Q, N = problem.A, problem.B, problem.Q, problem.N_cross
    R = np.atleast_2d(problem.R)
    K = problem.horizon
    if K < 1:
        raise ValueError("horizon must be >= 1")
    if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-10:
        raise ValueError("terminal cost is not positive semidefinite")
    P = {K: Q.copy()}
    gains = {}
    for k in range(K - 1, 0, -1):
        Pn = P[k + 1]
        S = R + B.T @ Pn @ B
        gain = np.linalg.solve(S, B.T @ Pn @ A + N.T)
        Pk = Q + A.T @ Pn @ A - (A.T @ Pn @ B + N) @ gain
        P[k] = 0.5 * (Pk + Pk.T)
        gains[k] = gain.ravel()
    return GainSchedule(gains=gains, P=P, horizon=K)


def stationarity_threshold(schedule: GainSchedule, tol: float) -> int:
    """Largest m with relative gain deviation from gain_1 below tol for k <= m."""
    if not schedule.gains:
        raise ValueError("empty gain schedule")
    ks = sorted(schedule.gains)
    g1 = schedule.gains[ks[0]]
    scale = np.linalg.norm(g1)
    m = 0
    for k in ks:
        dev = np.linalg.norm(schedule.gains[k] - g1) / scale
        if dev < tol:
            m = k
        else:
            break
    return m


def threshold_report(config: PlatoonConfig, weights: RewardWeights,
                     tol: float = 0.01) -> dict:
    """JSON-ready summary: per-step gains, deviations and the computed m."""
    problem = build_problem(config, weights)
    schedule = riccati_backward(problem)
    ks = sorted(schedule.gains)
    g1 = schedule.gains[ks[0]]
    scale = np.linalg.norm(g1)
    deviations = {k: float(np.linalg.norm(schedule.gains[k] - g1) / scale)
                  for k in ks}
    m = stationarity_threshold(schedule, tol)
    return {
        "horizon": schedule.horizon,
        "tolerance": tol,
        "stationary_threshold": m,
        "stationary_gain": [float(x) for x in g1],
        "gains": {str(k): [float(x) for x in schedule.gains[k]] for k in ks},
        "deviations": {str(k): deviations[k] for k in ks},
    }
