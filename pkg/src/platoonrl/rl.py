"""Replay memory with strict FIFO eviction and Ornstein-Uhlenbeck noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Transition:
    """One experience tuple (observation, action, reward, next observation)."""

    s: np.ndarray
    u: float
    r: float
    s_next: np.ndarray


class ReplayBuffer:
    """Bounded FIFO of flat float rows; oldest entries are evicted first.

    Rows are laid out as [s, u, r, s_next, end_flag]; the flag marks
    horizon-end transitions and is 0 for entries stored via ``store``.
    """

    def __init__(self, capacity: int, obs_dim: int, u_bounds=None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.u_bounds = u_bounds
        self.width = 2 * obs_dim + 3
        self._data = np.empty((capacity, self.width))
        self._n = 0
        self._head = 0  # next physical slot to write

    def __len__(self):
        return self._n

    def push_row(self, row):
        self._data[self._head] = row
        self._head = (self._head + 1) % self.capacity
        self._n = min(self._n + 1, self.capacity)

    def push(self, s, u, r, s_next, end=0.0):
        d = self.obs_dim
        row = np.empty(self.width)
        row[:d] = s
        row[d] = u
        row[d + 1] = r
        row[d + 2:2 * d + 2] = s_next
        row[-1] = end
        self.push_row(row)

    def _logical_to_physical(self, idx):
        if self._n < self.capacity:
            return idx
        return (self._head + idx) % self.capacity

    def rows(self):
        """All stored rows, oldest first."""
        idx = self._logical_to_physical(np.arange(self._n))
        return self._data[idx]

    def sample_rows(self, n: int, rng: np.random.Generator):
        """Uniform sample with replacement; requires a non-empty buffer."""
        if self._n == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._logical_to_physical(rng.integers(0, self._n, size=n))
        return self._data[idx]

    def sample_columns(self, n: int, rng: np.random.Generator):
        """Sampled minibatch split into (s, u, r, s_next, end) views."""
        d = self.obs_dim
        batch = self.sample_rows(n, rng)
        return (batch[:, :d], batch[:, d], batch[:, d + 1],
                batch[:, d + 2:2 * d + 2], batch[:, -1])


def store(buffer: ReplayBuffer, transition: Transition):
    """Validate and append one transition (FIFO eviction at capacity)."""
    s = np.asarray(transition.s, dtype=float)
    s_next = np.asarray(transition.s_next, dtype=float)
    values = np.concatenate([s, s_next, [transition.u, transition.r]])
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite transition")
    if buffer.u_bounds is not None:
        lo, hi = buffer.u_bounds
        if not lo <= transition.u <= hi:
            raise ValueError(f"action {transition.u} outside [{lo}, {hi}]")
    buffer.push(s, transition.u, transition.r, s_next)


def sample(buffer: ReplayBuffer, n_batch: int, rng: np.random.Generator):
    """Uniform-with-replacement minibatch as Transition objects."""
    d = buffer.obs_dim
    rows = buffer.sample_rows(n_batch, rng)
    return [Transition(s=row[:d].copy(), u=float(row[d]), r=float(row[d + 1]),
                       s_next=row[d + 2:2 * d + 2].copy())
            for row in rows]


class OuNoise:
    """Scalar Ornstein-Uhlenbeck process reverting to zero."""

    def __init__(self, theta: float = 0.15, sigma: float = 0.5):
        if not 0 < theta <= 1:
            raise ValueError("theta must be in (0, 1]")
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self.theta = theta
        self.sigma = sigma
        self.state = 0.0

    def reset(self):
        self.state = 0.0

    def step(self, rng: np.random.Generator) -> float:
        self.state += self.theta * (0.0 - self.state) \
            + self.sigma * rng.standard_normal()
        return self.state


def ou_step(noise: OuNoise, rng: np.random.Generator) -> float:
    """Advance the process one step and return the new state."""
    return noise.step(rng)
