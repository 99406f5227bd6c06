"""Leader velocity traces: CSV ingestion, input derivation, splits, synthesis.

A trace is the leader's velocity sampled at the episode interval. Its
acceleration is the forward difference of velocity, and the control input is
recovered by inverting the first-order driveline lag, so re-simulating the
derived inputs reproduces the accelerations wherever no clipping occurred.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import PlatoonConfig
from .util import fmt, rng_from


@dataclass(frozen=True, eq=False)
class LeaderTrace:
    """One episode of leader motion: velocities plus derived (acc, u)."""

    episode_id: str
    v: np.ndarray
    acc: np.ndarray
    u: np.ndarray


def derive_leader_inputs(v, config: PlatoonConfig):
    """Forward-difference accelerations and lag-inverted control inputs.

    acc_k = (v_{k+1} - v_k) / dt clipped to the acceleration limits;
    u_k = tau * (acc_{k+1} - acc_k) / dt + acc_k clipped to the input limits.
    Lengths shrink by one per difference.
    """
    v = np.asarray(v, dtype=float)
    if len(v) < 3:
        raise ValueError("need at least 3 velocity samples")
    acc = np.clip(np.diff(v) / config.dt, config.acc_min, config.acc_max)
    tau = config.tau[0]
    u = np.clip(tau * np.diff(acc) / config.dt + acc[:-1],
                config.u_min, config.u_max)
    return acc, u


def _make_trace(episode_id, v, config):
    acc, u = derive_leader_inputs(v, config)
    return LeaderTrace(episode_id=str(episode_id), v=np.asarray(v, float),
                       acc=acc, u=u)


def load_traces(path, config: PlatoonConfig) -> list:
    """Read episodes from a `episode_id,step,v` CSV (header required).

    Traces shorter than horizon+2 samples are rejected by id; malformed rows
    raise with their line number. Returns traces sorted by episode id.
    """
    min_len = config.horizon + 2
    series = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: no traces (empty file)")
        if [c.strip() for c in header] != ["episode_id", "step", "v"]:
            raise ValueError(f"{path}: expected header episode_id,step,v")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ValueError(f"{path} line {lineno}: expected 3 columns")
            episode_id, step_text, v_text = (c.strip() for c in row)
            try:
                step = int(step_text)
                v = float(v_text)
            except ValueError:
                raise ValueError(
                    f"{path} line {lineno}: malformed row {row!r}") from None
            if not np.isfinite(v) or v < 0:
                raise ValueError(
                    f"{path} line {lineno}: velocity must be finite and >= 0")
            steps, values = series.setdefault(episode_id, ([], []))
            if steps and step <= steps[-1]:
                raise ValueError(
                    f"{path} line {lineno}: steps of episode {episode_id!r} "
                    "must be strictly increasing")
            steps.append(step)
            values.append(v)
    if not series:
        raise ValueError(f"{path}: no traces")
    traces = []
    for episode_id in sorted(series):
        values = series[episode_id][1]
        if len(values) < min_len:
            raise ValueError(
                f"trace {episode_id!r} too short: {len(values)} samples, "
                f"need >= {min_len}")
        traces.append(_make_trace(episode_id, values, config))
    return traces


def save_traces(traces, path):
    """Write traces in the `episode_id,step,v` CSV schema (exact floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode_id", "step", "v"])
        for trace in traces:
            for step, v in enumerate(trace.v):
                writer.writerow([trace.episode_id, step, fmt(v)])


def split(traces, ratio: float, seed: int):
    """Deterministic shuffled split into (train, test) by the given ratio."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    order = rng_from(seed, "split").permutation(len(traces))
    n_train = int(ratio * len(traces))
    train = [traces[i] for i in order[:n_train]]
    test = [traces[i] for i in order[n_train:]]
    return train, test


def generate_synthetic(n_episodes: int, config: PlatoonConfig, seed: int) -> list:
    """Smooth random leader traces standing in for recorded driving data.

    Accelerations follow a mean-reverting random walk bounded away from the
    physical limits; velocities stay non-negative. Reproducible per seed.
    """
    n_samples = config.horizon + 2
    acc_cap = 0.8 * config.acc_max
    traces = []
    for e in range(n_episodes):
        rng = rng_from(seed, "trace", e)
        v = np.empty(n_samples)
        v[0] = rng.uniform(8.0, 20.0)
        acc = 0.0
        for t in range(n_samples - 1):
            acc += 0.08 * (0.0 - acc) + 0.12 * rng.standard_normal()
            acc = min(max(acc, -acc_cap), acc_cap)
            acc = max(acc, -v[t] / config.dt)  # keep velocity non-negative
            v[t + 1] = v[t] + config.dt * acc
        traces.append(_make_trace(f"syn{e:04d}", v, config))
    return traces
