"""Finite-horizon backward-induction training and its three refinements.

The baseline trains one actor-critic pair per time step, backward from the
horizon, each against the frozen networks of the step after it. Refinements:
initialize each step from the step trained before it (backward weight
transfer), replace the early steps with one stationary pair (threshold m),
and re-train while sweeping only the state regions a kick-off policy visits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DdpgConfig, PlatoonConfig, RewardWeights, SsConfig, replace
from .ddpg import OnePeriodTrainer, SpanTrainer
from .env import FollowerObservation, clamp_acc, default_initial_states, \
    jerk as jerk_of, platoon_rollout
from .nets import MlpSpec, init_weights, weights_hash
from .policies import PolicySet
from .reward import reward as step_reward, terminal_reward_batch
from .util import rng_from

BOX_DIMS = ("e_p", "e_v", "acc", "acc_pred", "u_pred")


@dataclass(frozen=True)
class StateBox:
    """Axis-aligned sampling region over (e_p, e_v, acc, acc_pred, u_pred)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(BOX_DIMS) or len(self.hi) != len(BOX_DIMS):
            raise ValueError(f"boxes have {len(BOX_DIMS)} dimensions")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("box lower bounds must not exceed upper bounds")

    def sample_vec(self, rng):
        return rng.uniform(self.lo, self.hi)

    def sample_batch(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=(n, len(self.lo)))

    def contains(self, vec, atol=0.0):
        return all(l - atol <= v <= h + atol
                   for l, v, h in zip(self.lo, vec, self.hi))

    def within(self, other, atol=1e-12):
        return all(ol - atol <= l and h <= oh + atol for l, h, ol, oh in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def expanded(self, margin):
        return StateBox(tuple(l - margin for l in self.lo),
                        tuple(h + margin for h in self.hi))

    def intersect(self, other):
        return StateBox(tuple(max(a, b) for a, b in zip(self.lo, other.lo)),
                        tuple(min(a, b) for a, b in zip(self.hi, other.hi)))


def large_box(config: PlatoonConfig, ss: SsConfig) -> StateBox:
    """Initial sweep region: configured error bounds, full physical limits."""
    return StateBox(
        lo=(-ss.ep_box, -ss.ev_box, config.acc_min, config.acc_min, config.u_min),
        hi=(ss.ep_box, ss.ev_box, config.acc_max, config.acc_max, config.u_max))


def sample_state(box: StateBox, rng) -> FollowerObservation:
    """Independent uniform draw per dimension."""
    return FollowerObservation.from_array(box.sample_vec(rng))


class SweepEnv:
    """One-period environment for a single follower at swept states.

    States are drawn uniformly from the active per-step box. Stepping applies
    the follower dynamics, propagates the predecessor's acceleration through
    its driveline lag, and redraws the predecessor's next control input from
    the next step's box (an exogenous disturbance).
    """

    def __init__(self, pconfig: PlatoonConfig, weights: RewardWeights,
                 vehicle: int, boxes):
        if len(boxes) != pconfig.horizon + 1:
            raise ValueError("need one box per step 1..K (index 0 unused)")
        self.pconfig = pconfig
        self.weights = weights
        self.vehicle = vehicle
        self.boxes = boxes
        self.horizon = pconfig.horizon
        self.action_bounds = (pconfig.u_min, pconfig.u_max)
        dt = pconfig.dt
        self._tau = pconfig.tau[vehicle]
        self._h = pconfig.time_gap[vehicle]
        self._ratio = dt / self._tau
        self._pred_ratio = dt / pconfig.tau[vehicle - 1]

    def draw(self, k, rng):
        return self.boxes[k].sample_vec(rng)

    def step(self, k, s, u, rng):
        cfg = self.pconfig
        dt = cfg.dt
        e_p, e_v, acc, acc_pred, u_pred = s
        j = jerk_of(acc, u, self._tau)
        r = step_reward(e_p, e_v, u, j, cfg.acc_max, cfg.u_max, dt, self.weights)
        e_p2 = e_p + dt * e_v - self._h * dt * acc
        e_v2 = e_v - dt * acc + dt * acc_pred
        acc2 = clamp_acc((1.0 - self._ratio) * acc + self._ratio * u, cfg)
        acc_pred2 = clamp_acc(
            (1.0 - self._pred_ratio) * acc_pred + self._pred_ratio * u_pred, cfg)
        box_next = self.boxes[min(k + 1, self.horizon)]
        u_pred2 = rng.uniform(box_next.lo[4], box_next.hi[4])
        return r, np.array([e_p2, e_v2, acc2, acc_pred2, u_pred2])

    def terminal_value(self, s_batch):
        return terminal_reward_batch(s_batch, self.pconfig, self.weights,
                                     self.vehicle)


class FhTrainer:
    """Backward-induction trainer for one follower, one episode at a time.

    Blocks run per-step learners for k = K-1 down to m+1, then (for m >= 1)
    one stationary learner over steps 1..m. Initial weights follow the
    configured transfer rule; targets always chain to the step trained last.
    """

    def __init__(self, env, actor_spec: MlpSpec, critic_spec: MlpSpec,
                 dconfig: DdpgConfig, seed_key, *, m=0, use_nb=False,
                 init_policies: PolicySet | None = None, step_buffer=None,
                 head_buffer=None, head_episodes=None, follower=None,
                 algo="fh-ddpg", audit=None):
        K = env.horizon
        if m != 0 and not 1 <= m < K - 1:
            raise ValueError(f"need m=0 or 1 <= m < K-1, got m={m}, K={K}")
        self.env = env
        self.dconfig = dconfig
        self.gamma = env.weights.gamma
        self.seed_key = tuple(seed_key)
        self.m = m
        self.use_nb = use_nb
        self.init_policies = init_policies
        self.step_buffer = step_buffer or dconfig.step_buffer
        self.head_buffer = head_buffer or self.step_buffer
        self.head_episodes = head_episodes or dconfig.episodes
        self.follower = follower if follower is not None else env.vehicle
        self.algo = algo
        self.audit = audit
        self.horizon = K

        rng0 = rng_from(*self.seed_key, self.follower, "theta0")
        self.actor0 = init_weights(actor_spec, rng0)
        self.critic0 = init_weights(critic_spec, rng0)
        self.step_actors = {}
        self.step_critics = {}
        self.head_actor = None
        self.head_critic = None
        self._last_trained = None  # (actor, critic) of the newest trained step
        self._schedule = [("step", k) for k in range(K - 1, m, -1)]
        if m >= 1:
            self._schedule.append(("head", None))
        self._idx = 0
        self._current = None

    # -- block management -----------------------------------------------------

    def _init_nets_for_step(self, k):
        if self.init_policies is not None:
            return (self.init_policies.step_actors[k],
                    self.init_policies.step_critics[k])
        if self.use_nb and self._last_trained is not None:
            return self._last_trained
        return self.actor0, self.critic0

    def _start_block(self):
        kind, k = self._schedule[self._idx]
        if kind == "step":
            init_actor, init_critic = self._init_nets_for_step(k)
            target_actor = target_critic = None
            if k < self.horizon - 1:
                target_actor, target_critic = self._last_trained
            rng = rng_from(*self.seed_key, self.follower, "step", k)
            self._current = OnePeriodTrainer(
                init_actor, init_critic, target_actor, target_critic, k,
                self.env, self.dconfig, self.gamma, self.step_buffer, rng,
                audit=self.audit)
            if self.audit is not None:
                self.audit.add(
                    "train_step", follower=self.follower, k=k,
                    init_actor=weights_hash(init_actor),
                    init_critic=weights_hash(init_critic),
                    target_actor=None if target_actor is None
                    else weights_hash(target_actor),
                    target_critic=None if target_critic is None
                    else weights_hash(target_critic))
        else:
            if self.init_policies is not None and \
                    self.init_policies.head_actor is not None:
                init_actor = self.init_policies.head_actor
                init_critic = self.init_policies.head_critic
            elif self.use_nb:
                init_actor, init_critic = self._last_trained
            else:
                init_actor, init_critic = self.actor0, self.critic0
            target_actor, target_critic = self._last_trained
            frozen_actor = target_actor.copy()
            frozen_critic = target_critic.copy()

            def terminal_value(s2, _fa=frozen_actor, _fc=frozen_critic):
                return _fc.forward(s2, _fa.forward(s2))

            rng = rng_from(*self.seed_key, self.follower, "head")
            self._current = SpanTrainer(
                init_actor, init_critic, target_actor, target_critic,
                range(1, self.m + 1), self.env, self.dconfig, self.gamma,
                self.head_buffer, rng, terminal_value=terminal_value,
                episodes=self.head_episodes)
            if self.audit is not None:
                self.audit.add(
                    "head_start", follower=self.follower, m=self.m,
                    init_actor=weights_hash(init_actor),
                    init_critic=weights_hash(init_critic),
                    target_actor=weights_hash(target_actor),
                    target_critic=weights_hash(target_critic))

    def _finish_block(self):
        kind, k = self._schedule[self._idx]
        trainer = self._current
        if kind == "step":
            trainer.finish_audit()
            self.step_actors[k] = trainer.actor
            self.step_critics[k] = trainer.critic
            self._last_trained = (trainer.actor, trainer.critic)
            if self.audit is not None:
                self.audit.add("trained_step", follower=self.follower, k=k,
                               actor=weights_hash(trainer.actor),
                               critic=weights_hash(trainer.critic))
        else:
            self.head_actor = trainer.actor
            self.head_critic = trainer.critic
            if self.audit is not None:
                self.audit.add("head_end", follower=self.follower,
                               actor=weights_hash(trainer.actor),
                               critic=weights_hash(trainer.critic))
        self._current = None
        self._idx += 1

    # -- public API -------------------------------------------------------------

    def done(self):
        return self._idx >= len(self._schedule)

    def advance_episode(self):
        """Run one training episode; returns environment interactions used."""
        if self.done():
            return 0
        if self._current is None:
            self._start_block()
        n = self._current.run_episode()
        if self._current.done():
            self._finish_block()
        return n

    def run(self):
        while not self.done():
            self.advance_episode()
        return self.policies()

    def _fallback_nets(self):
        if self._current is not None:
            return self._current.actor, self._current.critic
        if self._last_trained is not None:
            return self._last_trained
        return self.actor0, self.critic0

    def policies(self, partial=False) -> PolicySet:
        """Trained PolicySet; with partial=True untrained steps fall back to
        their scheduled initial weights (snapshot for mid-training evaluation)."""
        if not partial and not self.done():
            raise RuntimeError("training is not finished")
        actors = dict(self.step_actors)
        critics = dict(self.step_critics)
        head_actor, head_critic = self.head_actor, self.head_critic
        if partial:
            fb_actor, fb_critic = self._fallback_nets()
            for k in range(self.horizon - 1, self.m, -1):
                if k not in actors:
                    if self.init_policies is not None:
                        actors[k] = self.init_policies.step_actors[k]
                        critics[k] = self.init_policies.step_critics[k]
                    else:
                        actors[k] = fb_actor
                        critics[k] = fb_critic
            if self.m >= 1 and head_actor is None:
                if self.init_policies is not None and \
                        self.init_policies.head_actor is not None:
                    head_actor = self.init_policies.head_actor
                    head_critic = self.init_policies.head_critic
                else:
                    head_actor, head_critic = fb_actor, fb_critic
        return PolicySet(
            self.horizon, self.m, self.env.pconfig, self.env.weights,
            vehicle=self.env.vehicle, algo=self.algo, seed=None,
            step_actors=actors, step_critics=critics,
            head_actor=head_actor, head_critic=head_critic)


def run_lockstep(trainers, progress=None):
    """Advance several trainers in round-robin, one episode each per round."""
    while any(not t.done() for t in trainers):
        n = 0
        for t in trainers:
            n += t.advance_episode()
        if progress is not None and n:
            progress(n, lambda: [t.policies(partial=True) for t in trainers])


# -- algorithm entry points (single follower unless stated) -------------------


def fh_ddpg(env, actor_spec, critic_spec, dconfig, seed, *, use_nb=False,
            algo=None, audit=None, progress=None) -> PolicySet:
    """Backward induction with per-step networks and frozen targets."""
    trainer = FhTrainer(env, actor_spec, critic_spec, dconfig, (seed,),
                        m=0, use_nb=use_nb,
                        algo=algo or ("fh-ddpg-nb" if use_nb else "fh-ddpg"),
                        audit=audit)
    run_lockstep([trainer], progress)
    return trainer.policies()


def fh_ddpg_nb(env, actor_spec, critic_spec, dconfig, seed, *, audit=None,
               progress=None) -> PolicySet:
    """Backward induction with network weights transferred backward in time."""
    return fh_ddpg(env, actor_spec, critic_spec, dconfig, seed, use_nb=True,
                   audit=audit, progress=progress)


def fh_ddpg_sa(env, m, actor_spec, critic_spec, dconfig, seed, *,
               use_nb=False, init_policies=None, step_buffer=None,
               head_buffer=None, head_episodes=None, algo=None, audit=None,
               progress=None) -> PolicySet:
    """Per-step training down to m+1, then one stationary pair for steps 1..m."""
    if not 1 <= m < env.horizon - 1:
        raise ValueError(f"need 1 <= m < K-1, got m={m}")
    trainer = FhTrainer(env, actor_spec, critic_spec, dconfig, (seed,),
                        m=m, use_nb=use_nb, init_policies=init_policies,
                        step_buffer=step_buffer, head_buffer=head_buffer,
                        head_episodes=head_episodes,
                        algo=algo or ("fh-ddpg-sa-nb" if use_nb else "fh-ddpg-sa"),
                        audit=audit)
    run_lockstep([trainer], progress)
    return trainer.policies()


def extract_boxes(rollout_logs, traces_used, pconfig: PlatoonConfig,
                  base_box: StateBox, margin=0.0):
    """Componentwise [min, max] of the states visited in test rollouts.

    Returns per-follower lists of per-step boxes (index 0 unused), each
    padded by ``margin`` and intersected with the sweep region ``base_box``
    so reduced sweeps never leave the design envelope.
    """
    if not rollout_logs:
        raise ValueError("empty test logs")
    F = pconfig.n_followers
    K = pconfig.horizon
    lo = np.full((F, K, len(BOX_DIMS)), np.inf)
    hi = np.full((F, K, len(BOX_DIMS)), -np.inf)
    for logs, trace in zip(rollout_logs, traces_used):
        for i in range(F):
            log = logs[i]
            if i == 0:
                acc_pred = np.asarray(trace.acc[:K])
                u_pred = np.asarray(trace.u[:K])
            else:
                acc_pred = logs[i - 1].acc
                u_pred = logs[i - 1].u
            stacked = np.stack([log.e_p, log.e_v, log.acc, acc_pred, u_pred],
                               axis=1)
            np.minimum(lo[i], stacked, out=lo[i])
            np.maximum(hi[i], stacked, out=hi[i])
    out = []
    for i in range(F):
        boxes = [None]
        for t in range(K):
            box = StateBox(tuple(lo[i, t]), tuple(hi[i, t]))
            if margin:
                box = box.expanded(margin)
            boxes.append(box.intersect(base_box))
        out.append(boxes)
    return out


def fh_ddpg_ss(pconfig: PlatoonConfig, weights: RewardWeights,
               dconfig: DdpgConfig, ss: SsConfig, m, actor_spec, critic_spec,
               bound_traces, seed, *, audit=None, progress=None):
    """Two-phase reduced-state-space training for the whole platoon.

    Phase 1 learns a kick-off policy per follower by sweeping the large box
    (with backward weight transfer); its test rollouts define per-step state
    boxes; phase 2 continues from the phase-1 weights sweeping only those.
    Returns (policy sets, per-follower per-step boxes).
    """
    if not bound_traces:
        raise ValueError("bound extraction requires at least one leader trace")
    F = pconfig.n_followers
    ls = large_box(pconfig, ss)
    ls_boxes = [None] + [ls] * pconfig.horizon

    cfg1 = replace(dconfig, episodes=ss.phase1_episodes,
                   eval_every=min(dconfig.eval_every, ss.phase1_episodes))
    trainers1 = [
        FhTrainer(SweepEnv(pconfig, weights, i, ls_boxes), actor_spec,
                  critic_spec, cfg1, (seed, "phase1"), m=m, use_nb=True,
                  step_buffer=ss.phase1_buffer, head_buffer=ss.phase1_buffer,
                  algo="fh-ddpg-ss", audit=audit)
        for i in range(1, F + 1)]
    run_lockstep(trainers1, progress)
    kick = [t.policies() for t in trainers1]

    initial = default_initial_states(pconfig)
    logs_list, used = [], []
    for g in range(ss.bound_episodes):
        trace = bound_traces[g % len(bound_traces)]
        logs_list.append(platoon_rollout(kick, trace, initial, pconfig, weights))
        used.append(trace)
    boxes = extract_boxes(logs_list, used, pconfig, ls, ss.box_margin)
    if audit is not None:
        audit.add("ss_boxes", episodes=len(logs_list),
                  contained=all(b.within(ls) for fb in boxes
                                for b in fb[1:]))
        for i, k_policies in enumerate(kick, start=1):
            audit.add("ss_phase1_policies", follower=i,
                      steps={k: weights_hash(a) for k, a in
                             k_policies.step_actors.items()},
                      head=weights_hash(k_policies.head_actor)
                      if k_policies.head_actor is not None else None)

    cfg2 = replace(dconfig, episodes=ss.phase2_episodes,
                   eval_every=min(dconfig.eval_every, ss.phase2_episodes))
    trainers2 = [
        FhTrainer(SweepEnv(pconfig, weights, i, boxes[i - 1]), actor_spec,
                  critic_spec, cfg2, (seed, "phase2"), m=m, use_nb=False,
                  init_policies=kick[i - 1], step_buffer=ss.phase2_buffer,
                  head_buffer=ss.phase2_buffer, algo="fh-ddpg-ss", audit=audit)
        for i in range(1, F + 1)]
    run_lockstep(trainers2, progress)
    return [t.policies() for t in trainers2], boxes
