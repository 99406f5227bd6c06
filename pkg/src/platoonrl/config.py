"""Dataclass configuration for the platoon environment, reward and trainers.

Defaults reproduce the reference operating point: a 5-vehicle platoon at
10 Hz over 100-step episodes, symmetric 2.6 m/s^2 acceleration/input limits,
Huber-style reward weights and the full-scale training hyper-parameters.
``RunConfig.desk()`` swaps in a small-compute preset (reduced networks and
episode budgets) that keeps every behavioural property intact.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field

ALGORITHMS = ("ddpg", "fh-ddpg", "fh-ddpg-nb", "fh-ddpg-sa", "fh-ddpg-ss")


def _per_vehicle(value, n, name):
    """Normalize a scalar or length-n sequence to an n-tuple of floats."""
    if isinstance(value, (int, float)):
        return (float(value),) * n
    out = tuple(float(v) for v in value)
    if len(out) != n and len(set(out)) == 1:
        return (out[0],) * n  # homogeneous values survive a fleet resize
    if len(out) != n:
        raise ValueError(f"{name}: expected 1 or {n} values, got {len(out)}")
    return out


@dataclass(frozen=True)
class PlatoonConfig:
    """Physical and episode parameters of the platoon environment.

    Per-vehicle fields (tau, time_gap, standstill, veh_len) accept a scalar
    for a homogeneous platoon or one value per vehicle, leader first.
    """

    n_vehicles: int = 5
    dt: float = 0.1           # step interval [s]
    horizon: int = 100        # steps per episode
    tau: tuple = 0.1          # driveline time constant [s]
    time_gap: tuple = 1.0     # desired time gap [s]
    standstill: tuple = 2.0   # standstill distance [m]
    veh_len: tuple = 4.5      # body length [m]
    acc_min: float = -2.6
    acc_max: float = 2.6
    u_min: float = -2.6
    u_max: float = 2.6

    def __post_init__(self):
        if self.n_vehicles < 2:
            raise ValueError("n_vehicles must be >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        for name in ("tau", "time_gap", "standstill", "veh_len"):
            object.__setattr__(
                self, name, _per_vehicle(getattr(self, name), self.n_vehicles, name)
            )
        if min(self.tau) <= 0:
            raise ValueError("tau must be positive")
        if min(self.time_gap) < 0:
            raise ValueError("time_gap must be >= 0")
        if not self.acc_min < self.acc_max:
            raise ValueError("need acc_min < acc_max")
        if not self.u_min < self.u_max:
            raise ValueError("need u_min < u_max")

    @property
    def n_followers(self):
        return self.n_vehicles - 1


@dataclass(frozen=True)
class RewardWeights:
    """Weights of the branch-defined (absolute / quadratic) step reward."""

    ev_coef: float = 0.1       # weight on the velocity-error term
    u_coef: float = 0.1        # weight on the control-input term
    jerk_coef: float = 0.2     # weight on the jerk term
    threshold: float = -0.4483  # branch threshold; absolute branch below it
    ep_nominal: float = 15.0   # nominal max gap error [m]
    ev_nominal: float = 10.0   # nominal max velocity error [m/s]
    quad_scale: float = 5e-3   # scale of the quadratic branch
    gamma: float = 1.0         # return discount factor

    def __post_init__(self):
        if min(self.ev_coef, self.u_coef, self.jerk_coef) <= 0:
            raise ValueError("reward coefficients must be positive")
        if self.quad_scale <= 0:
            raise ValueError("quad_scale must be positive")
        if self.threshold >= 0:
            raise ValueError("threshold must be negative")
        if min(self.ep_nominal, self.ev_nominal) <= 0:
            raise ValueError("nominal errors must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")


@dataclass(frozen=True)
class DdpgConfig:
    """Hyper-parameters shared by all actor-critic trainers."""

    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    episodes: int = 5000        # training episodes per learner
    soft_update: float = 1e-3   # target-tracking rate of plain DDPG
    buffer_capacity: int = 250000  # replay size of the stationary trainer
    step_buffer: int = 2500        # replay size of each per-step learner
    eval_every: int = 100       # periodic-evaluation cadence [episodes]
    eval_episodes: int = 10     # test episodes per evaluation point
    noise_theta: float = 0.15
    noise_sigma: float = 0.5

    def __post_init__(self):
        if min(self.actor_lr, self.critic_lr) < 0:
            raise ValueError("learning rates must be >= 0")
        if min(self.batch_size, self.episodes, self.buffer_capacity,
               self.step_buffer, self.eval_every, self.eval_episodes) <= 0:
            raise ValueError("counts must be positive")
        if self.eval_every > self.episodes:
            raise ValueError("eval_every must not exceed episodes")
        if not 0 <= self.soft_update <= 1:
            raise ValueError("soft_update must be in [0, 1]")
        if not 0 < self.noise_theta <= 1:
            raise ValueError("noise_theta must be in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class SsConfig:
    """Two-phase reduced-state-space sweep settings."""

    bound_episodes: int = 10      # test rollouts used to extract the bounds
    phase1_episodes: int = 3000
    phase2_episodes: int = 2000
    phase1_buffer: int = 2500
    phase2_buffer: int = 2000
    ep_box: float = 2.0           # gap-error half-width of the large box [m]
    ev_box: float = 1.5           # velocity-error half-width [m/s]
    box_margin: float = 0.0       # padding added around extracted bounds

    def __post_init__(self):
        if min(self.bound_episodes, self.phase1_episodes, self.phase2_episodes,
               self.phase1_buffer, self.phase2_buffer) <= 0:
            raise ValueError("counts must be positive")
        if min(self.ep_box, self.ev_box) <= 0:
            raise ValueError("box half-widths must be positive")
        if self.box_margin < 0:
            raise ValueError("box_margin must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    """One experiment: platoon + reward + trainer settings + run options."""

    platoon: PlatoonConfig = field(default_factory=PlatoonConfig)
    reward: RewardWeights = field(default_factory=RewardWeights)
    training: DdpgConfig = field(default_factory=DdpgConfig)
    sweep: SsConfig = field(default_factory=SsConfig)
    algo: str = "fh-ddpg-ss"
    stationary_steps: int = 11        # steps 1..m served by the stationary head
    actor_hidden: tuple = (400, 300, 100)
    critic_hidden: tuple = (400, 300, 100)
    ddpg_hidden: tuple = (256, 128)   # network sizes of the plain-DDPG baseline
    action_layer: int = 1             # hidden layer fed the critic action input
    seed: int = 0
    jerk_clip_lo: float = -0.3        # test-time jerk band [1/s^3 units of j]
    jerk_clip_hi: float = 0.6
    jerk_clip: bool = True            # clip applies to fh-* policies at test

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        if not 1 <= self.stationary_steps < self.platoon.horizon - 1:
            raise ValueError("stationary_steps must satisfy 1 <= m < K-1")
        for name in ("actor_hidden", "critic_hidden", "ddpg_hidden"):
            v = getattr(self, name)
            if isinstance(v, int):
                v = (v,)
            object.__setattr__(self, name, tuple(int(x) for x in v))
        if self.action_layer < 0:
            raise ValueError("action_layer must be >= 0")
        if not self.jerk_clip_lo <= self.jerk_clip_hi:
            raise ValueError("need jerk_clip_lo <= jerk_clip_hi")

    def desk(self, **overrides):
        """Small-compute preset: (64, 64) networks, shorter episodes, reduced
        budgets, and no test-time jerk clip (too blunt for desk-scale policies).
        """
        cfg = replace(
            self,
            platoon=replace(self.platoon, horizon=50),
            training=replace(
                self.training,
                episodes=500,
                batch_size=32,
                buffer_capacity=50000,
                eval_every=50,
                eval_episodes=5,
            ),
            sweep=replace(self.sweep, phase1_episodes=300, phase2_episodes=200,
                          bound_episodes=5),
            actor_hidden=(64, 64),
            critic_hidden=(64, 64),
            ddpg_hidden=(64, 64),
            jerk_clip=False,
        )
        return replace(cfg, **overrides) if overrides else cfg


def replace(cfg, **changes):
    """dataclasses.replace that tolerates nested dataclass updates."""
    return dataclasses.replace(cfg, **changes)


# --- INI serialization ------------------------------------------------------

_SECTIONS = {
    "platoon": ("platoon", PlatoonConfig),
    "reward": ("reward", RewardWeights),
    "training": ("training", DdpgConfig),
    "sweep": ("sweep", SsConfig),
    "run": (None, RunConfig),
}
_RUN_SCALARS = tuple(
    f.name for f in dataclasses.fields(RunConfig)
    if f.name not in ("platoon", "reward", "training", "sweep")
)


def _format_value(v):
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(text, ftype, name):
    text = text.strip()
    try:
        if ftype is int:
            return int(text)
        if ftype is float:
            return float(text)
        if ftype is bool:
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if ftype is tuple:
            parts = [p for p in (s.strip() for s in text.split(",")) if p]
            return tuple(float(p) if "." in p or "e" in p.lower() else int(p)
                         for p in parts)
        return text
    except ValueError as exc:
        raise ValueError(f"invalid value for {name}: {text!r}") from exc


def dump_config(cfg: RunConfig) -> str:
    """Render a RunConfig as an INI document (exact float round-trip)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section, (attr, dclass) in _SECTIONS.items():
        obj = getattr(cfg, attr) if attr else cfg
        names = _RUN_SCALARS if attr is None else [
            f.name for f in dataclasses.fields(dclass)]
        parser[section] = {n: _format_value(getattr(obj, n)) for n in names}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def parse_config(text: str) -> RunConfig:
    """Parse an INI document into a RunConfig; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    kwargs = {}
    run_kwargs = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        attr, dclass = _SECTIONS[section]
        fields = {f.name: f for f in dataclasses.fields(dclass)}
        allowed = set(_RUN_SCALARS) if attr is None else set(fields)
        section_kwargs = {}
        for key, raw in parser[section].items():
            if key not in allowed:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            ftype = fields[key].type
            if isinstance(ftype, str):  # from __future__ annotations
                ftype = {"int": int, "float": float, "bool": bool,
                         "tuple": tuple, "str": str}[ftype]
            section_kwargs[key] = _parse_value(raw, ftype, f"{section}.{key}")
        if attr is None:
            run_kwargs.update(section_kwargs)
        else:
            kwargs[attr] = dclass(**section_kwargs)
    return RunConfig(**kwargs, **run_kwargs)


def save_config(cfg: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
