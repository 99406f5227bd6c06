"""Dense networks with hand-written backpropagation, Adam, and target updates.

Two shapes are used throughout: actors map an observation through relu hidden
layers to a tanh output rescaled onto the action interval; critics take the
observation, receive the scalar action concatenated onto one hidden layer's
input, and emit a linear scalar value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .util import array_hash

ACTIVATIONS = ("relu", "tanh", "linear")
WEIGHTS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Architecture: layer sizes, activations, action injection, output range."""

    sizes: tuple            # input size, hidden sizes..., output size
    activations: tuple      # one per weight layer
    action_layer: int | None = None   # weight layer whose input gains the action
    output_range: tuple | None = None  # (lo, hi) rescaling of a tanh output

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "activations", tuple(self.activations))
        if self.output_range is not None:
            object.__setattr__(self, "output_range",
                               (float(self.output_range[0]),
                                float(self.output_range[1])))
        if len(self.sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if len(self.activations) != len(self.sizes) - 1:
            raise ValueError("one activation per weight layer required")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        if self.action_layer is not None and not (
                0 <= self.action_layer < len(self.sizes) - 1):
            raise ValueError("action_layer out of range")
        if self.output_range is not None:
            if self.activations[-1] != "tanh":
                raise ValueError("output_range requires a tanh output layer")
            if not self.output_range[0] < self.output_range[1]:
                raise ValueError("output_range must be increasing")

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def fan_in(self, layer):
        return self.sizes[layer] + (1 if layer == self.action_layer else 0)


def actor_spec(obs_dim, hidden, u_min, u_max) -> MlpSpec:
    sizes = (obs_dim, *hidden, 1)
    activations = ("relu",) * len(hidden) + ("tanh",)
    return MlpSpec(sizes, activations, output_range=(u_min, u_max))


def critic_spec(obs_dim, hidden, action_layer=1) -> MlpSpec:
    sizes = (obs_dim, *hidden, 1)
    activations = ("relu",) * len(hidden) + ("linear",)
    return MlpSpec(sizes, activations, action_layer=action_layer)


class Mlp:
    """Weights of one network plus forward/backward passes."""

    __slots__ = ("spec", "W", "b", "seed")

    def __init__(self, spec: MlpSpec, W, b, seed=None):
        self.spec = spec
        self.W = W
        self.b = b
        self.seed = seed

    def copy(self) -> "Mlp":
        return Mlp(self.spec, [w.copy() for w in self.W],
                   [b.copy() for b in self.b], self.seed)

    def params(self):
        return self.W + self.b

    # -- forward ------------------------------------------------------------

    def _check_input(self, x, action):
        if x.shape[-1] != self.spec.sizes[0]:
            raise ValueError(
                f"input dimension {x.shape[-1]} != expected {self.spec.sizes[0]}")
        if (action is None) != (self.spec.action_layer is None):
            raise ValueError("action input does not match the network spec")

    def forward(self, x, action=None):
        out, _ = self.forward_cached(x, action, keep=False)
        return out

    def forward_cached(self, x, action=None, keep=True):
        """Returns (output (B,), cache). Accepts (B, in) or a single (in,)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        self._check_input(x, action)
        if action is not None:
            action = np.asarray(action, dtype=float).reshape(len(x), 1)
        h = x
        cache = [] if keep else None
        for i in range(self.spec.n_layers):
            inp = h if i != self.spec.action_layer else np.concatenate(
                [h, action], axis=1)
            z = inp @ self.W[i] + self.b[i]
            act = self.spec.activations[i]
            if act == "relu":
                h = np.maximum(z, 0.0)
            elif act == "tanh":
                h = np.tanh(z)
            else:
                h = z
            if keep:
                cache.append((inp, h))
        out = h[:, 0] if h.shape[1] == 1 else h
        if self.spec.output_range is not None:
            lo, hi = self.spec.output_range
            out = lo + (out + 1.0) * 0.5 * (hi - lo)
        if single:
            out = out[0] if out.ndim == 1 else out
        return out, cache

    # -- backward -----------------------------------------------------------

    def backward(self, cache, grad_out):
        """Gradients of sum(grad_out * output) w.r.t. parameters and action.

        ``cache`` comes from ``forward_cached``; ``grad_out`` has shape (B,).
        Returns (dW list, db list, d_action (B,) or None).
        """
        grad_out = np.asarray(grad_out, dtype=float)
        dh = grad_out.reshape(-1, 1).copy()
        if self.spec.output_range is not None:
            lo, hi = self.spec.output_range
            dh *= 0.5 * (hi - lo)
        dW = [None] * self.spec.n_layers
        db = [None] * self.spec.n_layers
        d_action = None
        for i in range(self.spec.n_layers - 1, -1, -1):
            inp, h = cache[i]
            act = self.spec.activations[i]
            if act == "relu":
                dz = dh * (h > 0.0)
            elif act == "tanh":
                dz = dh * (1.0 - h * h)
            else:
                dz = dh
            dW[i] = inp.T @ dz
            db[i] = dz.sum(axis=0)
            if i > 0 or self.spec.action_layer == 0:
                dinp = dz @ self.W[i].T
                if i == self.spec.action_layer:
                    d_action = dinp[:, -1]
                    dinp = dinp[:, :-1]
                dh = dinp
        return dW, db, d_action


def init_weights(spec: MlpSpec, seed) -> Mlp:
    """Uniform fan-in initialization; the final layer uses U[-3e-3, 3e-3]."""
    rng = seed if isinstance(seed, np.random.Generator) else \
        np.random.default_rng(seed)
    W, b = [], []
    for i in range(spec.n_layers):
        fan_in = spec.fan_in(i)
        bound = 3e-3 if i == spec.n_layers - 1 else 1.0 / np.sqrt(fan_in)
        W.append(rng.uniform(-bound, bound, size=(fan_in, spec.sizes[i + 1])))
        b.append(rng.uniform(-bound, bound, size=spec.sizes[i + 1]))
    return Mlp(spec, W, b, seed=seed if isinstance(seed, int) else None)


def actor_forward(net: Mlp, obs):
    """Action(s) for one observation (float) or a batch (array)."""
    out = net.forward(obs)
    return float(out) if np.ndim(out) == 0 else out


def critic_forward(net: Mlp, obs, action):
    """Value(s) for observation/action pairs."""
    obs = np.asarray(obs, dtype=float)
    if obs.ndim == 1:
        out = net.forward(obs[None, :], np.asarray([action], dtype=float))
        return float(out[0])
    return net.forward(obs, action)


def soft_update(target: Mlp, source: Mlp, eta: float) -> Mlp:
    """target <- eta * source + (1 - eta) * target, elementwise, in place."""
    for t, s in zip(target.params(), source.params()):
        if t.shape != s.shape:
            raise ValueError("shape mismatch in soft_update")
        t *= 1.0 - eta
        t += eta * s
    return target


def hard_update(target: Mlp, source: Mlp) -> Mlp:
    return soft_update(target, source, 1.0)


def weights_hash(net: Mlp) -> str:
    return array_hash(*net.params())


class Adam:
    """Adaptive-moment optimizer with bias correction (one per network)."""

    def __init__(self, net: Mlp, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.params()]
        self.v = [np.zeros_like(p) for p in net.params()]

    def step(self, net: Mlp, dW, db):
        """One update from layer gradients; zero gradients leave a fresh
        optimizer's parameters unchanged, and lr = 0 is a strict no-op."""
        self.t += 1
        c1 = 1.0 / (1.0 - self.beta1 ** self.t)
        c2 = 1.0 / (1.0 - self.beta2 ** self.t)
        for p, g, m, v in zip(net.params(), list(dW) + list(db),
                              self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m * c1) / (np.sqrt(v * c2) + self.eps)


def optimizer_step(net: Mlp, grads, state: Adam) -> Mlp:
    """Apply one adaptive-moment update; ``grads`` is a (dW, db) pair."""
    state.step(net, grads[0], grads[1])
    return net


# -- persistence --------------------------------------------------------------

def save_weights(net: Mlp, path):
    doc = {
        "version": WEIGHTS_FORMAT_VERSION,
        "spec": {
            "sizes": list(net.spec.sizes),
            "activations": list(net.spec.activations),
            "action_layer": net.spec.action_layer,
            "output_range": list(net.spec.output_range)
            if net.spec.output_range else None,
        },
        "seed": net.seed,
        "layers": [{"w": w.tolist(), "b": b.tolist()}
                   for w, b in zip(net.W, net.b)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_weights(path) -> Mlp:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if "version" not in doc:
        raise ValueError(f"{path}: missing weight-format version")
    if doc["version"] != WEIGHTS_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported weight-format version "
                         f"{doc['version']}")
    spec_doc = doc["spec"]
    spec = MlpSpec(
        sizes=tuple(spec_doc["sizes"]),
        activations=tuple(spec_doc["activations"]),
        action_layer=spec_doc["action_layer"],
        output_range=tuple(spec_doc["output_range"])
        if spec_doc["output_range"] else None,
    )
    W = [np.asarray(layer["w"], dtype=float) for layer in doc["layers"]]
    b = [np.asarray(layer["b"], dtype=float) for layer in doc["layers"]]
    for i, (w, bias) in enumerate(zip(W, b)):
        if w.shape != (spec.fan_in(i), spec.sizes[i + 1]) or \
                bias.shape != (spec.sizes[i + 1],):
            raise ValueError(f"{path}: layer {i} shape mismatch")
    return Mlp(spec, W, b, seed=doc.get("seed"))
