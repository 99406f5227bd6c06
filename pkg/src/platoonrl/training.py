"""End-to-end training runs: algorithm dispatch, periodic evaluation curves.

The plain-DDPG baseline trains every follower jointly on real leader traces;
the finite-horizon algorithms train each follower against swept states. All
runs share the periodic-evaluation protocol: after every ``eval_every``
episode-equivalents (total interactions / (K * followers)) the current policy
snapshot is tested without exploration noise on fixed evaluation traces.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .ddpg import AuditLog, _AcTrainer
from .env import _follower_step_scalar, default_initial_states, platoon_rollout
from .evaluate import clip_for_policies
from .fh import FhTrainer, SweepEnv, fh_ddpg_ss, large_box, run_lockstep
from .nets import actor_spec, critic_spec, init_weights, soft_update
from .policies import PolicySet
from .reward import episode_return, myopic_action, reward as step_reward, \
    terminal_reward_batch
from .util import fmt, rng_from

OBS_DIM = 5


@dataclass
class TrainResult:
    policies: list
    curve: list                 # rows of {episode, follower, eval_return}
    algo: str
    seed: int
    boxes: list | None = None   # fh-ddpg-ss only
    audit: AuditLog | None = None


class CurveRecorder:
    """Periodic no-noise evaluation of policy snapshots during training."""

    def __init__(self, cfg: RunConfig, eval_traces):
        self.cfg = cfg
        self.eval_traces = eval_traces
        self.every = cfg.training.eval_every
        self.n_eval = min(cfg.training.eval_episodes, len(eval_traces))
        self.rows = []
        self._next = 0.0
        self._initial = default_initial_states(cfg.platoon)

    def maybe(self, equiv, snapshot_fn):
        if equiv >= self._next - 1e-9:
            self._record(equiv, snapshot_fn())
            while self._next <= equiv + 1e-9:
                self._next += self.every

    def finalize(self, equiv, snapshot_fn):
        self._record(equiv, snapshot_fn())

    def _record(self, equiv, policy_sets):
        if self.n_eval == 0:
            return
        clip = clip_for_policies(self.cfg, policy_sets)
        returns = np.zeros(len(policy_sets))
        for trace in self.eval_traces[:self.n_eval]:
            logs = platoon_rollout(policy_sets, trace, self._initial,
                                   self.cfg.platoon, self.cfg.reward,
                                   jerk_clip=clip)
            returns += [episode_return(log.reward, self.cfg.reward.gamma)
                        for log in logs]
        returns /= self.n_eval
        episode = int(round(equiv))
        for i, value in enumerate(returns, start=1):
            self.rows.append({"episode": episode, "follower": i,
                              "eval_return": float(value)})


def save_curve(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "follower", "eval_return"])
        for row in rows:
            writer.writerow([row["episode"], row["follower"],
                             fmt(row["eval_return"])])


def load_curve(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({"episode": int(row["episode"]),
                         "follower": int(row["follower"]),
                         "eval_return": float(row["eval_return"])})
    return rows


# -- plain DDPG baseline -------------------------------------------------------


class _BenchmarkLearner(_AcTrainer):
    """Single follower's networks inside the jointly trained platoon."""

    def __init__(self, actor, critic, cfg: RunConfig, vehicle, rng):
        super().__init__(actor, critic, cfg.training, cfg.reward.gamma,
                         (cfg.platoon.u_min, cfg.platoon.u_max),
                         cfg.training.buffer_capacity, rng)
        self.vehicle = vehicle
        self.pconfig = cfg.platoon
        self.weights = cfg.reward
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()

    def _bootstrap(self, s2, end):
        a2 = self.target_actor.forward(s2)
        out = self.target_critic.forward(s2, a2)
        at_end = end > 0.5
        if at_end.any():  # terminal rows use the myopic step-K reward
            out = out.copy()
            out[at_end] = terminal_reward_batch(
                s2[at_end], self.pconfig, self.weights, self.vehicle)
        return out

    def learn(self):
        self.update_from_batch(self._bootstrap)
        eta = self.config.soft_update
        if eta > 0:
            soft_update(self.target_actor, self.actor, eta)
            soft_update(self.target_critic, self.critic, eta)


class DdpgPlatoonTrainer:
    """Joint independent-learner DDPG over full-episode platoon rollouts.

    Each follower owns one stationary actor-critic pair acting at steps
    1..K-1; the terminal step plays the myopic action, and the last stored
    transition bootstraps with the terminal myopic reward.
    """

    def __init__(self, cfg: RunConfig, traces):
        if not traces:
            raise ValueError("training traces required")
        self.cfg = cfg
        self.traces = traces
        pc = cfg.platoon
        self.F = pc.n_followers
        aspec = actor_spec(OBS_DIM, cfg.ddpg_hidden, pc.u_min, pc.u_max)
        cspec = critic_spec(OBS_DIM, cfg.ddpg_hidden, cfg.action_layer)
        self.learners = []
        for i in range(1, self.F + 1):
            rng = rng_from(cfg.seed, "ddpg", i)
            actor = init_weights(aspec, rng)
            critic = init_weights(cspec, rng)
            self.learners.append(_BenchmarkLearner(actor, critic, cfg, i, rng))
        self._trace_rng = rng_from(cfg.seed, "ddpg", "traces")
        self.episode = 0

    def run_episode(self):
        cfg = self.cfg
        pc = cfg.platoon
        K = pc.horizon
        trace = self.traces[self._trace_rng.integers(len(self.traces))]
        acc0 = np.asarray(trace.acc)
        u0 = np.asarray(trace.u)
        X = np.array([s.as_array() for s in default_initial_states(pc)])
        for lrn in self.learners:
            lrn.noise.reset()
        pending = [None] * self.F

        def handle(i, obs, end):
            if pending[i] is not None:
                s, u, r = pending[i]
                self.learners[i].buffer.push(s, u, r, obs, end=end)
                self.learners[i].learn()

        for t in range(K - 1):
            us = np.empty(self.F)
            obs_now = []
            for i in range(self.F):
                acc_pred = acc0[t] if i == 0 else X[i - 1, 2]
                u_pred = u0[t] if i == 0 else us[i - 1]
                obs = np.array([X[i, 0], X[i, 1], X[i, 2], acc_pred, u_pred])
                obs_now.append(obs)
                us[i] = self.learners[i].act(obs)
                handle(i, obs, end=0.0)
            for i in range(self.F):
                j = (us[i] - X[i, 2]) / pc.tau[i + 1]
                r = step_reward(X[i, 0], X[i, 1], us[i], j, pc.acc_max,
                                pc.u_max, pc.dt, cfg.reward)
                pending[i] = (obs_now[i], us[i], r)
            acc_before = X[:, 2].copy()
            for i in range(self.F):
                acc_pred = acc0[t] if i == 0 else acc_before[i - 1]
                X[i] = _follower_step_scalar(X[i, 0], X[i, 1], X[i, 2], us[i],
                                             acc_pred, pc, i + 1)
        # terminal observations at step K; the predecessor plays myopically
        t = K - 1
        u_prev = u0[t]
        acc_prev = acc0[t]
        for i in range(self.F):
            obs = np.array([X[i, 0], X[i, 1], X[i, 2], acc_prev, u_prev])
            handle(i, obs, end=1.0)
            pending[i] = None
            u_prev = myopic_action(obs, pc, cfg.reward, vehicle=i + 1)
            acc_prev = X[i, 2]
        self.episode += 1
        return self.F * (K - 1)

    def done(self):
        return self.episode >= self.cfg.training.episodes

    def snapshot(self):
        pc = self.cfg.platoon
        return [PolicySet(pc.horizon, pc.horizon - 1, pc, self.cfg.reward,
                          vehicle=i + 1, algo="ddpg", seed=self.cfg.seed,
                          head_actor=lrn.actor.copy(),
                          head_critic=lrn.critic.copy())
                for i, lrn in enumerate(self.learners)]


# -- dispatch -------------------------------------------------------------------


def train_run(cfg: RunConfig, traces_train, traces_eval,
              audit: AuditLog | None = None) -> TrainResult:
    """Train ``cfg.algo`` and return policies plus the evaluation curve."""
    recorder = CurveRecorder(cfg, traces_eval)
    pc = cfg.platoon
    K, F = pc.horizon, pc.n_followers
    boxes = None

    if cfg.algo == "ddpg":
        trainer = DdpgPlatoonTrainer(cfg, traces_train)
        recorder.maybe(0.0, trainer.snapshot)
        while not trainer.done():
            trainer.run_episode()
            recorder.maybe(trainer.episode, trainer.snapshot)
        recorder.finalize(trainer.episode, trainer.snapshot)
        policies = trainer.snapshot()
    else:
        aspec = actor_spec(OBS_DIM, cfg.actor_hidden, pc.u_min, pc.u_max)
        cspec = critic_spec(OBS_DIM, cfg.critic_hidden, cfg.action_layer)
        interactions = 0

        def progress(n, snapshot_fn):
            nonlocal interactions
            interactions += n
            recorder.maybe(interactions / (K * F), snapshot_fn)

        if cfg.algo == "fh-ddpg-ss":
            policies, boxes = fh_ddpg_ss(
                pc, cfg.reward, cfg.training, cfg.sweep, cfg.stationary_steps,
                aspec, cspec, traces_train, cfg.seed, audit=audit,
                progress=progress)
        else:
            m = cfg.stationary_steps if cfg.algo == "fh-ddpg-sa" else 0
            use_nb = cfg.algo == "fh-ddpg-nb"
            box = large_box(pc, cfg.sweep)
            box_list = [None] + [box] * K
            trainers = [
                FhTrainer(SweepEnv(pc, cfg.reward, i, box_list), aspec, cspec,
                          cfg.training, (cfg.seed,), m=m, use_nb=use_nb,
                          algo=cfg.algo, audit=audit)
                for i in range(1, F + 1)]
            recorder.maybe(0.0, lambda: [t.policies(partial=True)
                                         for t in trainers])
            run_lockstep(trainers, progress)
            policies = [t.policies() for t in trainers]
        recorder.finalize(interactions / (K * F), lambda: policies)

    return TrainResult(policies=policies, curve=recorder.rows, algo=cfg.algo,
                       seed=cfg.seed, boxes=boxes, audit=audit)
