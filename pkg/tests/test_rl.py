import numpy as np
import pytest

from platoonrl.config import DdpgConfig
from platoonrl.rl import OuNoise, ReplayBuffer, Transition, ou_step, sample, \
    store


def transition(tag, obs_dim=2):
    return Transition(s=np.full(obs_dim, float(tag)), u=0.5, r=-0.1,
                      s_next=np.full(obs_dim, float(tag) + 0.5))


class ZeroNormal:
    """Stub generator: standard_normal always 0 (isolates the drift term)."""

    def standard_normal(self):
        return 0.0


# -- replay buffer -------------------------------------------------------------


def test_fifo_eviction():
    buf = ReplayBuffer(capacity=2, obs_dim=2)
    for tag in (1, 2, 3):
        store(buf, transition(tag))
    assert len(buf) == 2
    tags = [row[0] for row in buf.rows()]
    assert tags == [2.0, 3.0]  # oldest entry evicted, insertion order kept


def test_store_grows_to_capacity_only():
    buf = ReplayBuffer(capacity=5, obs_dim=2)
    store(buf, transition(1))
    assert len(buf) == 1
    for tag in range(20):
        store(buf, transition(tag))
    assert len(buf) == 5


def test_store_validates_entries():
    buf = ReplayBuffer(capacity=4, obs_dim=2, u_bounds=(-2.6, 2.6))
    with pytest.raises(ValueError, match="non-finite"):
        store(buf, Transition(np.array([np.nan, 0.0]), 0.0, 0.0, np.zeros(2)))
    with pytest.raises(ValueError, match="outside"):
        store(buf, Transition(np.zeros(2), 3.0, 0.0, np.zeros(2)))


def test_default_capacity_and_batch_from_config():
    cfg = DdpgConfig()
    assert cfg.buffer_capacity == 250_000
    assert cfg.batch_size == 64


def test_sample_single_entry_buffer():
    buf = ReplayBuffer(capacity=8, obs_dim=2)
    store(buf, transition(7))
    rng = np.random.default_rng(0)
    batch = sample(buf, 64, rng)
    assert len(batch) == 64
    assert all(t.s[0] == 7.0 for t in batch)


def test_sample_empty_buffer_rejected():
    buf = ReplayBuffer(capacity=8, obs_dim=2)
    with pytest.raises(ValueError, match="empty"):
        buf.sample_rows(4, np.random.default_rng(0))


def test_sample_uniformity_chi_square():
    from scipy import stats

    buf = ReplayBuffer(capacity=100, obs_dim=1)
    for tag in range(100):
        buf.push(np.array([float(tag)]), 0.0, 0.0, np.array([0.0]))
    rng = np.random.default_rng(123)
    draws = buf.sample_rows(1_000_000, rng)[:, 0].astype(int)
    counts = np.bincount(draws, minlength=100)
    _, p = stats.chisquare(counts)
    assert p > 0.01


def test_sample_after_wraparound_uniform_over_survivors():
    buf = ReplayBuffer(capacity=10, obs_dim=1)
    for tag in range(25):  # survivors are 15..24
        buf.push(np.array([float(tag)]), 0.0, 0.0, np.array([0.0]))
    rng = np.random.default_rng(5)
    draws = buf.sample_rows(5000, rng)[:, 0]
    assert draws.min() == 15.0 and draws.max() == 24.0


# -- Ornstein-Uhlenbeck noise ------------------------------------------------------


def test_ou_drift_only():
    noise = OuNoise(theta=0.15, sigma=0.5)
    noise.state = 1.0
    assert ou_step(noise, ZeroNormal()) == pytest.approx(0.85)
    noise.state = 0.0
    assert ou_step(noise, ZeroNormal()) == 0.0


def test_ou_reset():
    noise = OuNoise()
    noise.step(np.random.default_rng(0))
    noise.reset()
    assert noise.state == 0.0


def test_ou_stationary_moments():
    noise = OuNoise(theta=0.15, sigma=0.5)
    rng = np.random.default_rng(7)
    xi = rng.standard_normal(1_000_000)

    class Replay:
        def __init__(self, values):
            self.values = iter(values)

        def standard_normal(self):
            return next(self.values)

    src = Replay(xi)
    samples = np.empty(len(xi))
    for i in range(len(xi)):
        samples[i] = noise.step(src)
    target = 0.5 ** 2 / (1 - (1 - 0.15) ** 2)  # AR(1) stationary variance
    assert target == pytest.approx(0.9009, abs=1e-4)
    burn = samples[1000:]
    assert abs(burn.var() - target) / target < 0.05
    assert abs(burn.mean()) < 0.02


def test_ou_parameter_validation():
    with pytest.raises(ValueError):
        OuNoise(theta=0.0)
    with pytest.raises(ValueError):
        OuNoise(sigma=-1.0)
