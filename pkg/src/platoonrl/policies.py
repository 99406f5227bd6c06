"""Per-time-step policy collections with a stationary head and myopic last step."""
from __future__ import annotations

import dataclasses
import json
import os

from .config import PlatoonConfig, RewardWeights
from .nets import load_weights, save_weights
from .reward import myopic_action

POLICY_FORMAT_VERSION = 1


class PolicySet:
    """Policies for one follower over steps 1..K.

    Steps above the stationary threshold m (and below the horizon K) use
    per-step actors; steps 1..m share the stationary head; the final step K
    always plays the myopic action. A plain stationary policy is the special
    case m = K - 1 with no per-step actors.
    """

    def __init__(self, horizon, m, pconfig: PlatoonConfig,
                 weights: RewardWeights, vehicle=1, algo="", seed=None,
                 step_actors=None, step_critics=None,
                 head_actor=None, head_critic=None):
        if not 0 <= m <= horizon - 1:
            raise ValueError("need 0 <= m <= K-1")
        self.horizon = horizon
        self.m = m
        self.pconfig = pconfig
        self.weights = weights
        self.vehicle = vehicle
        self.algo = algo
        self.seed = seed
        self.step_actors = dict(step_actors or {})
        self.step_critics = dict(step_critics or {})
        self.head_actor = head_actor
        self.head_critic = head_critic

    def actor_for(self, k):
        """Actor network serving step k; None for the myopic terminal step."""
        if not 1 <= k <= self.horizon:
            raise ValueError(f"step {k} outside 1..{self.horizon}")
        if k == self.horizon:
            return None
        if k <= self.m:
            if self.head_actor is None:
                raise ValueError(f"no stationary head for step {k}")
            return self.head_actor
        try:
            return self.step_actors[k]
        except KeyError:
            raise ValueError(f"no actor for step {k}") from None

    def action(self, k, obs) -> float:
        actor = self.actor_for(k)
        if actor is None:
            return myopic_action(obs, self.pconfig, self.weights, self.vehicle)
        return float(actor.forward(obs))

    # -- persistence ----------------------------------------------------------

    def save(self, path):
        os.makedirs(path, exist_ok=True)
        meta = {
            "version": POLICY_FORMAT_VERSION,
            "horizon": self.horizon,
            "m": self.m,
            "vehicle": self.vehicle,
            "algo": self.algo,
            "seed": self.seed,
            "steps": sorted(self.step_actors),
            "has_head": self.head_actor is not None,
            "platoon": dataclasses.asdict(self.pconfig),
            "reward": dataclasses.asdict(self.weights),
        }
        with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)
        for k, net in self.step_actors.items():
            save_weights(net, os.path.join(path, f"step_{k:04d}_actor.json"))
        for k, net in self.step_critics.items():
            save_weights(net, os.path.join(path, f"step_{k:04d}_critic.json"))
        if self.head_actor is not None:
            save_weights(self.head_actor, os.path.join(path, "head_actor.json"))
        if self.head_critic is not None:
            save_weights(self.head_critic, os.path.join(path, "head_critic.json"))

    @classmethod
    def load(cls, path) -> "PolicySet":
        with open(os.path.join(path, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("version") != POLICY_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported policy-format version")
        pconfig = PlatoonConfig(**{
            k: tuple(v) if isinstance(v, list) else v
            for k, v in meta["platoon"].items()})
        weights = RewardWeights(**meta["reward"])
        step_actors, step_critics = {}, {}
        for k in meta["steps"]:
            step_actors[k] = load_weights(
                os.path.join(path, f"step_{k:04d}_actor.json"))
            critic_path = os.path.join(path, f"step_{k:04d}_critic.json")
            if os.path.exists(critic_path):
                step_critics[k] = load_weights(critic_path)
        head_actor = head_critic = None
        if meta["has_head"]:
            head_actor = load_weights(os.path.join(path, "head_actor.json"))
            head_path = os.path.join(path, "head_critic.json")
            if os.path.exists(head_path):
                head_critic = load_weights(head_path)
        return cls(meta["horizon"], meta["m"], pconfig, weights,
                   vehicle=meta["vehicle"], algo=meta["algo"],
                   seed=meta["seed"], step_actors=step_actors,
                   step_critics=step_critics, head_actor=head_actor,
                   head_critic=head_critic)


def save_platoon_policies(policy_sets, path):
    """Persist one PolicySet per follower under follower_<i>/ directories."""
    os.makedirs(path, exist_ok=True)
    for ps in policy_sets:
        ps.save(os.path.join(path, f"follower_{ps.vehicle}"))


def load_platoon_policies(path):
    names = sorted(n for n in os.listdir(path) if n.startswith("follower_"))
    if not names:
        raise ValueError(f"{path}: no follower_<i> policy directories")
    return [PolicySet.load(os.path.join(path, n)) for n in names]
