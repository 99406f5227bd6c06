import numpy as np
import pytest

from platoonrl.config import PlatoonConfig
from platoonrl.data import (derive_leader_inputs, generate_synthetic,
                            load_traces, save_traces, split)
from platoonrl.env import leader_step

CFG = PlatoonConfig(horizon=10)  # traces need >= 12 samples


def write_csv(tmp_path, rows, header="episode_id,step,v"):
    path = tmp_path / "traces.csv"
    lines = [header] + rows if header else rows
    path.write_text("\n".join(lines) + "\n")
    return path


def episode_rows(episode_id, velocities):
    return [f"{episode_id},{i},{v}" for i, v in enumerate(velocities)]


def test_load_two_episodes(tmp_path):
    rows = episode_rows("a", [15.0] * 12) + episode_rows("b", [10.0] * 13)
    traces = load_traces(write_csv(tmp_path, rows), CFG)
    assert [t.episode_id for t in traces] == ["a", "b"]
    assert len(traces[0].v) == 12


def test_constant_velocity_derives_zero_inputs(tmp_path):
    traces = load_traces(write_csv(tmp_path, episode_rows("a", [15.0] * 12)),
                         CFG)
    assert np.all(traces[0].acc == 0.0)
    assert np.all(traces[0].u == 0.0)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="no traces"):
        load_traces(path, CFG)
    with pytest.raises(ValueError, match="no traces"):
        load_traces(write_csv(tmp_path, []), CFG)


def test_malformed_row_names_line(tmp_path):
    rows = episode_rows("a", [15.0] * 5) + ["a,5,not-a-number"] \
        + episode_rows_from("a", 6, [15.0] * 7)
    with pytest.raises(ValueError, match="line 7"):
        load_traces(write_csv(tmp_path, rows), CFG)


def episode_rows_from(episode_id, start, velocities):
    return [f"{episode_id},{start + i},{v}" for i, v in enumerate(velocities)]


def test_short_trace_rejected_with_id(tmp_path):
    rows = episode_rows("tiny", [15.0] * 5)
    with pytest.raises(ValueError, match="tiny"):
        load_traces(write_csv(tmp_path, rows), CFG)


def test_negative_velocity_rejected(tmp_path):
    rows = episode_rows("a", [15.0] * 3 + [-1.0] + [15.0] * 8)
    with pytest.raises(ValueError, match=">= 0"):
        load_traces(write_csv(tmp_path, rows), CFG)


def test_save_load_round_trip(tmp_path):
    traces = generate_synthetic(3, CFG, seed=9)
    path = tmp_path / "out.csv"
    save_traces(traces, path)
    loaded = load_traces(path, CFG)
    for a, b in zip(traces, loaded):
        assert a.episode_id == b.episode_id
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.acc, b.acc)
        assert np.array_equal(a.u, b.u)


# -- input derivation -----------------------------------------------------------


def test_derive_constant():
    acc, u = derive_leader_inputs(np.full(12, 7.0), CFG)
    assert np.all(acc == 0.0) and np.all(u == 0.0)


def test_derive_ramp():
    v = 0.1 * np.arange(12)
    acc, u = derive_leader_inputs(v, CFG)
    assert np.allclose(acc, 1.0)
    assert np.allclose(u, 1.0)


def test_derive_requires_three_samples():
    with pytest.raises(ValueError):
        derive_leader_inputs([1.0, 2.0], CFG)


def test_inverse_consistency_on_unclipped_trace():
    """Re-simulating the derived (acc_0, u) reproduces the acc sequence."""
    rng = np.random.default_rng(4)
    acc_true = np.clip(np.cumsum(rng.uniform(-0.05, 0.05, 40)), -1.0, 1.0)
    v = 15.0 + np.concatenate([[0.0], np.cumsum(acc_true) * CFG.dt])
    acc, u = derive_leader_inputs(v, CFG)
    resim = [acc[0]]
    for uk in u:
        resim.append(leader_step(resim[-1], uk, CFG))
    assert np.max(np.abs(np.asarray(resim)[:len(acc)] - acc)) <= 1e-9


# -- splits ---------------------------------------------------------------------


def test_split_sizes():
    train, test = split(list(range(1000)), 0.8, seed=0)
    assert len(train) == 800 and len(test) == 200
    train, test = split(list(range(10)), 0.8, seed=0)
    assert len(train) == 8 and len(test) == 2


def test_split_deterministic_disjoint_covering():
    items = list(range(57))
    a = split(items, 0.8, seed=3)
    b = split(items, 0.8, seed=3)
    assert a == b
    train, test = a
    assert set(train) | set(test) == set(items)
    assert not set(train) & set(test)


def test_split_rejects_bad_ratio():
    with pytest.raises(ValueError):
        split([1, 2], 1.0, seed=0)


# -- synthetic traces -------------------------------------------------------------


def test_synthetic_empty():
    assert generate_synthetic(0, CFG, seed=0) == []


def test_synthetic_constraints():
    for trace in generate_synthetic(20, CFG, seed=1):
        assert len(trace.v) == CFG.horizon + 2
        assert trace.v.min() >= 0.0
        assert np.abs(trace.acc).max() <= 2.6


def test_synthetic_deterministic():
    a = generate_synthetic(4, CFG, seed=5)
    b = generate_synthetic(4, CFG, seed=5)
    for ta, tb in zip(a, b):
        assert np.array_equal(ta.v, tb.v)
    c = generate_synthetic(4, CFG, seed=6)
    assert not np.array_equal(a[0].v, c[0].v)
