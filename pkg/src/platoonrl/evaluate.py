"""Policy evaluation: return statistics, safety analysis, string stability.

Evaluation rollouts are deterministic (no exploration noise), start every
follower from the reference initial state, and optionally apply the
test-time jerk clip to the actions of finite-horizon policies.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import PlatoonConfig, RewardWeights, RunConfig
from .data import LeaderTrace
from .env import LocalState, default_initial_states, platoon_rollout
from .reward import episode_return
from .util import fmt

LOG_COLUMNS = ("follower", "step", "e_p", "e_v", "acc", "u", "jerk", "reward")


def jerk_clip(u, acc, k, cfg: RunConfig) -> float:
    """Test-time action clip keeping the jerk within the configured band.

    Identity for k <= m; beyond the stationary threshold the control input is
    limited to [acc + tau * lo, acc + tau * hi] (then the usual input clamp).
    """
    if k <= cfg.stationary_steps:
        return float(u)
    tau = cfg.platoon.tau[1]
    lo = acc + tau * cfg.jerk_clip_lo
    hi = acc + tau * cfg.jerk_clip_hi
    return float(min(max(u, lo), hi))


def clip_tuple(cfg: RunConfig):
    """(lo, hi, after_step) rollout argument matching ``jerk_clip``."""
    return (cfg.jerk_clip_lo, cfg.jerk_clip_hi, cfg.stationary_steps)


def clip_for_policies(cfg: RunConfig, policy_sets):
    """Jerk clip applies to finite-horizon policies only, when enabled."""
    if not cfg.jerk_clip:
        return None
    algos = {ps.algo for ps in policy_sets}
    if algos and all(a.startswith("fh-ddpg") for a in algos):
        return clip_tuple(cfg)
    return None


@dataclass
class FollowerStats:
    mean: float
    max: float
    min: float
    std: float


@dataclass
class EvalReport:
    """Aggregated evaluation outcome over a set of test episodes."""

    episodes: int
    per_follower: dict            # follower index -> FollowerStats
    sum_mean: float               # mean over episodes of the followers' sum
    sum_max: float
    sum_min: float
    sum_std: float
    min_headway: float
    most_negative_ep: float
    most_negative_ep_follower: int
    most_negative_ep_step: int
    most_negative_ep_episode: int
    collision: bool
    worst_episode: int            # episode index with the lowest sum return
    returns: np.ndarray = field(repr=False)  # (episodes, followers)

    def to_json(self) -> dict:
        doc = {k: v for k, v in asdict(self).items() if k != "returns"}
        doc["per_follower"] = {str(k): asdict(v) if not isinstance(v, dict)
                               else v for k, v in doc["per_follower"].items()}
        doc["returns"] = [[float(x) for x in row] for row in self.returns]
        return doc


def evaluate(policy_sets, traces, n_episodes, pconfig: PlatoonConfig,
             weights: RewardWeights, jerk_clip_spec=None, log_dir=None,
             initial_states=None, workers=1):
    """Deterministic evaluation over the first ``n_episodes`` traces."""
    if n_episodes > len(traces):
        raise ValueError(
            f"requested {n_episodes} episodes but only {len(traces)} traces")
    if len(policy_sets) != pconfig.n_followers:
        raise ValueError("one policy set per follower required")
    initial = initial_states or default_initial_states(pconfig)
    jobs = [(traces[e], e) for e in range(n_episodes)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_logs = list(pool.map(
                _rollout_star,
                [(policy_sets, t, initial, pconfig, weights, jerk_clip_spec)
                 for t, _ in jobs]))
    else:
        all_logs = [platoon_rollout(policy_sets, t, initial, pconfig, weights,
                                    jerk_clip=jerk_clip_spec)
                    for t, _ in jobs]
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        for e, logs in enumerate(all_logs):
            write_episode_log(logs, os.path.join(log_dir, f"episode_{e:04d}.csv"))
    return report_from_logs(all_logs, weights), all_logs


def _rollout_star(args):
    return platoon_rollout(args[0], args[1], args[2], args[3], args[4],
                           jerk_clip=args[5])


def report_from_logs(all_logs, weights: RewardWeights) -> EvalReport:
    """Aggregate per-episode logs into the evaluation report."""
    if not all_logs:
        raise ValueError("no episode logs")
    F = len(all_logs[0])
    returns = np.array([[episode_return(log.reward, weights.gamma)
                         for log in logs] for logs in all_logs])
    per_follower = {}
    for i in range(F):
        col = returns[:, i]
        per_follower[i + 1] = FollowerStats(
            mean=float(col.mean()), max=float(col.max()),
            min=float(col.min()), std=float(col.std()))
    sums = returns.sum(axis=1)
    min_headway = np.inf
    worst_ep = (0.0, 0, 0, 0)  # value, follower, step, episode
    for e, logs in enumerate(all_logs):
        for log in logs:
            h = float(log.headway.min())
            min_headway = min(min_headway, h)
            idx = int(np.argmin(log.e_p))
            if log.e_p[idx] < worst_ep[0]:
                worst_ep = (float(log.e_p[idx]), log.follower, idx + 1, e)
    return EvalReport(
        episodes=len(all_logs),
        per_follower=per_follower,
        sum_mean=float(sums.mean()), sum_max=float(sums.max()),
        sum_min=float(sums.min()), sum_std=float(sums.std()),
        min_headway=float(min_headway),
        most_negative_ep=worst_ep[0],
        most_negative_ep_follower=worst_ep[1],
        most_negative_ep_step=worst_ep[2],
        most_negative_ep_episode=worst_ep[3],
        collision=bool(min_headway <= 0.0),
        worst_episode=int(np.argmin(sums)),
        returns=returns)


def safety_report(all_logs, config: PlatoonConfig):
    """(min headway, most negative gap error, collision flag) over the logs."""
    if not all_logs:
        raise ValueError("no episode logs")
    min_headway = min(float(log.headway.min())
                      for logs in all_logs for log in logs)
    most_negative = min(float(log.e_p.min())
                        for logs in all_logs for log in logs)
    return min_headway, most_negative, min_headway <= 0.0


def pulse_trace(config: PlatoonConfig, accel=2.0, start=21, end=30,
                v0=20.0) -> LeaderTrace:
    """Leader trace whose realized acceleration is ``accel`` on steps
    start..end (inclusive, 1-indexed) and 0 elsewhere."""
    K = config.horizon
    if not 1 <= start <= end <= K:
        raise ValueError(f"pulse window {start}..{end} outside horizon {K}")
    n = K + 2
    acc = np.zeros(n - 1)
    acc[start - 1:end] = accel
    v = np.empty(n)
    v[0] = v0
    v[1:] = v0 + np.cumsum(acc) * config.dt
    if v.min() < 0:
        raise ValueError("pulse drives the leader velocity negative")
    # invert the driveline lag so re-simulation reproduces acc exactly
    tau = config.tau[0]
    u = np.clip(tau * np.diff(acc) / config.dt + acc[:-1],
                config.u_min, config.u_max)
    return LeaderTrace(episode_id="pulse", v=v, acc=np.clip(
        acc, config.acc_min, config.acc_max), u=u)


def string_stability_experiment(policy_sets, pconfig: PlatoonConfig,
                                weights: RewardWeights, jerk_clip_spec=None,
                                accel=2.0, start=21, end=30, v0=20.0):
    """Leader acceleration pulse from zero-error initial conditions.

    Returns a dict with per-follower peak |e_v| and |e_p|, the episode logs,
    and whether the peaks decrease strictly upstream (string stability).
    """
    trace = pulse_trace(pconfig, accel=accel, start=start, end=end, v0=v0)
    initial = [LocalState(0.0, 0.0, 0.0)] * pconfig.n_followers
    logs = platoon_rollout(policy_sets, trace, initial, pconfig, weights,
                           jerk_clip=jerk_clip_spec)
    peak_ev = [float(np.max(np.abs(log.e_v))) for log in logs]
    peak_ep = [float(np.max(np.abs(log.e_p))) for log in logs]
    return {
        "peak_ev": peak_ev,
        "peak_ep": peak_ep,
        "ev_attenuating": all(b < a for a, b in zip(peak_ev, peak_ev[1:])),
        "ep_attenuating": all(b < a for a, b in zip(peak_ep, peak_ep[1:])),
        "trace": trace,
        "logs": logs,
    }


def write_episode_log(logs, path):
    """Persist one episode's follower logs in the plottable CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for log in logs:
            for t in range(len(log)):
                writer.writerow([log.follower, t + 1,
                                 fmt(log.e_p[t]), fmt(log.e_v[t]),
                                 fmt(log.acc[t]), fmt(log.u[t]),
                                 fmt(log.jerk[t]), fmt(log.reward[t])])


def read_episode_rewards(path):
    """Per-follower reward sequences from a persisted episode log."""
    rewards = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rewards.setdefault(int(row["follower"]), []).append(
                float(row["reward"]))
    return {f: np.asarray(r) for f, r in rewards.items()}


def write_report(report: EvalReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=1)
