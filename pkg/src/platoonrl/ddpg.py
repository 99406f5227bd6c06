"""Actor-critic learners: one-period training with frozen targets, and
multi-step training with soft target tracking.

Both trainers advance one episode at a time so callers can interleave several
learners and evaluate snapshots mid-training. The one-period variant solves a
single time step against fixed target networks; the multi-step variant runs
episodes over a contiguous span of steps and tracks its own targets.
"""
from __future__ import annotations

import numpy as np

from .nets import Adam, Mlp, soft_update, weights_hash
from .rl import OuNoise, ReplayBuffer


class AuditLog:
    """Structural event recorder used by the algorithm-invariant checks."""

    def __init__(self):
        self.events = []

    def add(self, kind, **info):
        self.events.append({"kind": kind, **info})

    def of(self, kind):
        return [e for e in self.events if e["kind"] == kind]


class _AcTrainer:
    """Shared actor-critic update machinery over a replay buffer."""

    def __init__(self, actor: Mlp, critic: Mlp, config, gamma, action_bounds,
                 buffer_capacity, rng):
        self.actor = actor.copy()
        self.critic = critic.copy()
        self.config = config
        self.gamma = gamma
        self.action_bounds = action_bounds
        self.rng = rng
        self.actor_opt = Adam(self.actor, config.actor_lr)
        self.critic_opt = Adam(self.critic, config.critic_lr)
        obs_dim = self.actor.spec.sizes[0]
        self.buffer = ReplayBuffer(buffer_capacity, obs_dim)
        self.noise = OuNoise(config.noise_theta, config.noise_sigma)
        self.episode = 0

    def act(self, obs, explore=True):
        u = float(self.actor.forward(obs))
        if explore:
            u += self.noise.step(self.rng)
        lo, hi = self.action_bounds
        return min(max(u, lo), hi)

    def update_from_batch(self, target_q_fn):
        """One critic + actor update on a sampled minibatch.

        ``target_q_fn(s_next, end)`` supplies the bootstrap value for each
        sampled row; the target is y = r + gamma * target_q_fn(...).
        """
        s, u, r, s2, end = self.buffer.sample_columns(
            self.config.batch_size, self.rng)
        y = r + self.gamma * target_q_fn(s2, end)
        q, cache = self.critic.forward_cached(s, u)
        err = q - y
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise RuntimeError(
                f"critic loss diverged at episode {self.episode}")
        dW, db, _ = self.critic.backward(cache, (2.0 / len(y)) * err)
        self.critic_opt.step(self.critic, dW, db)

        a, a_cache = self.actor.forward_cached(s)
        _, q_cache = self.critic.forward_cached(s, a)
        _, _, d_action = self.critic.backward(
            q_cache, np.full(len(s), 1.0 / len(s)))
        dW, db, _ = self.actor.backward(a_cache, -d_action)  # ascent on Q
        self.actor_opt.step(self.actor, dW, db)
        return loss


class OnePeriodTrainer(_AcTrainer):
    """Trains the step-k networks of a finite-horizon problem.

    The target networks stay frozen for the whole training. At the step
    before the horizon end the bootstrap value is the environment's terminal
    value (reward of the myopic action) instead of the target critic.
    """

    def __init__(self, actor, critic, target_actor, target_critic, k, env,
                 config, gamma, buffer_capacity, rng, audit=None):
        super().__init__(actor, critic, config, gamma, env.action_bounds,
                         buffer_capacity, rng)
        self.target_actor = target_actor
        self.target_critic = target_critic
        self.k = k
        self.env = env
        self.terminal = k == env.horizon - 1
        self.audit = audit
        if audit is not None:
            audit.add("ddpg_ft_start", k=k, myopic_target=self.terminal,
                      target_actor=_hash_or_none(target_actor),
                      target_critic=_hash_or_none(target_critic))

    def _bootstrap(self, s2, end):
        if self.terminal:
            return self.env.terminal_value(s2)
        a2 = self.target_actor.forward(s2)
        return self.target_critic.forward(s2, a2)

    def run_episode(self):
        self.episode += 1
        self.noise.reset()
        s = self.env.draw(self.k, self.rng)
        u = self.act(s)
        r, s2 = self.env.step(self.k, s, u, self.rng)
        self.buffer.push(s, u, r, s2)
        self.update_from_batch(self._bootstrap)
        return 1  # one environment interaction

    def done(self):
        return self.episode >= self.config.episodes

    def finish_audit(self):
        if self.audit is not None:
            self.audit.add("ddpg_ft_end", k=self.k,
                           target_actor=_hash_or_none(self.target_actor),
                           target_critic=_hash_or_none(self.target_critic))


class SpanTrainer(_AcTrainer):
    """Soft-target trainer over episodes spanning time steps lo..hi.

    Mid-span transitions bootstrap with the trainer's own (soft-updated)
    targets; the transition at the span end uses ``terminal_value`` when
    given (e.g. the frozen next-step critic) and plain y = r otherwise.
    """

    def __init__(self, actor, critic, target_actor, target_critic, steps, env,
                 config, gamma, buffer_capacity, rng, terminal_value=None,
                 episodes=None):
        super().__init__(actor, critic, config, gamma, env.action_bounds,
                         buffer_capacity, rng)
        self.target_actor = target_actor.copy()
        self.target_critic = target_critic.copy()
        self.steps = list(steps)
        if not self.steps:
            raise ValueError("empty step span")
        self.env = env
        self.terminal_value = terminal_value
        self.episodes = config.episodes if episodes is None else episodes

    def _bootstrap(self, s2, end):
        a2 = self.target_actor.forward(s2)
        out = self.target_critic.forward(s2, a2)
        at_end = end > 0.5
        if at_end.any():  # horizon-end rows bootstrap with the terminal value
            if self.terminal_value is not None:
                out = out.copy()
                out[at_end] = self.terminal_value(s2[at_end])
            else:
                out = np.where(at_end, 0.0, out)
        return out

    def run_episode(self):
        self.episode += 1
        self.noise.reset()
        s = self.env.draw(self.steps[0], self.rng)
        last = self.steps[-1]
        for k in self.steps:
            u = self.act(s)
            r, s2 = self.env.step(k, s, u, self.rng)
            self.buffer.push(s, u, r, s2, end=float(k == last))
            self.update_from_batch(self._bootstrap)
            eta = self.config.soft_update
            if eta > 0:
                soft_update(self.target_actor, self.actor, eta)
                soft_update(self.target_critic, self.critic, eta)
            s = s2
        return len(self.steps)

    def done(self):
        return self.episode >= self.episodes


def _hash_or_none(net):
    return None if net is None else weights_hash(net)


def ddpg_ft(init_actor, init_critic, target_actor, target_critic, k, env,
            config, gamma, rng, buffer_capacity=None, audit=None):
    """One-period training at time step k with frozen target networks.

    Runs ``config.episodes`` episodes of draw/act/observe/update and returns
    the trained (actor, critic). The inputs are never mutated; the targets
    are bit-identical before and after.
    """
    trainer = OnePeriodTrainer(
        init_actor, init_critic, target_actor, target_critic, k, env, config,
        gamma, buffer_capacity or config.step_buffer, rng, audit=audit)
    while not trainer.done():
        trainer.run_episode()
    trainer.finish_audit()
    return trainer.actor, trainer.critic


def ddpg(init_actor, init_critic, init_target_actor, init_target_critic,
         steps, env, config, gamma, rng, terminal_value=None,
         buffer_capacity=None, episodes=None):
    """Soft-target DDPG over a span of time steps; returns (actor, critic)."""
    trainer = SpanTrainer(
        init_actor, init_critic, init_target_actor, init_target_critic, steps,
        env, config, gamma, buffer_capacity or config.buffer_capacity, rng,
        terminal_value=terminal_value, episodes=episodes)
    while not trainer.done():
        trainer.run_episode()
    return trainer.actor, trainer.critic
