import numpy as np
import pytest
from hypothesis import given, strategies as st

from platoonrl.config import PlatoonConfig, RewardWeights
from platoonrl.env import FollowerObservation, LocalState, PredecessorSignal
from platoonrl.reward import (episode_return, myopic_action,
                              myopic_action_batch, reward,
                              terminal_reward_batch)

CFG = PlatoonConfig()
W = RewardWeights()


def r(e_p, e_v, u, j, w=W):
    return reward(e_p, e_v, u, j, CFG.acc_max, CFG.u_max, CFG.dt, w)


def abs_branch(e_p, e_v, u, j, w=W):
    return -(abs(e_p) / w.ep_nominal + w.ev_coef * abs(e_v) / w.ev_nominal
             + w.u_coef * abs(u) / CFG.u_max
             + w.jerk_coef * abs(j) / (2 * CFG.acc_max / CFG.dt))


def quad_branch(e_p, e_v, u, j, w=W):
    return -w.quad_scale * (e_p ** 2 + w.ev_coef * e_v ** 2
                            + w.u_coef * u ** 2 + w.jerk_coef * (j * CFG.dt) ** 2)


def test_zero_state_zero_reward():
    assert r(0, 0, 0, 0) == 0.0


def test_quadratic_branch_worked_example():
    # e_p=1.5, e_v=-1, acc=0, u=1 -> j=10; r_abs = -0.18692... >= eps
    got = r(1.5, -1.0, 1.0, 10.0)
    assert abs_branch(1.5, -1.0, 1.0, 10.0) == pytest.approx(-0.1869230769,
                                                             abs=1e-9)
    assert got == pytest.approx(-0.01325, abs=1e-9)


def test_absolute_branch_worked_example():
    # e_p=-10, e_v=5, acc=0, u=2.6 -> j=26; r_abs = -11/12 < eps
    got = r(-10.0, 5.0, 2.6, 26.0)
    assert got == pytest.approx(-11.0 / 12.0, abs=1e-9)


def test_branch_selection_literal_on_dense_grid():
    """R equals r_abs exactly when r_abs < eps, else r_qua, across a grid
    of states straddling the threshold."""
    for e_p in np.linspace(0.0, 14.0, 141):
        for u in (0.0, 1.3, 2.6):
            j = u / CFG.tau[1]
            ra = abs_branch(e_p, -2.0, u, j)
            rq = quad_branch(e_p, -2.0, u, j)
            expected = ra if ra < W.threshold else rq
            assert r(e_p, -2.0, u, j) == expected


def test_reward_rejects_nonfinite():
    with pytest.raises(ValueError):
        r(np.nan, 0, 0, 0)
    with pytest.raises(ValueError):
        r(0, 0, np.inf, 0)


@given(e_p=st.floats(-20, 20), e_v=st.floats(-10, 10),
       u=st.floats(-2.6, 2.6), j=st.floats(-52, 52))
def test_reward_nonpositive(e_p, e_v, u, j):
    value = r(e_p, e_v, u, j)
    assert value <= 0.0
    if (e_p, e_v, u, j) != (0.0, 0.0, 0.0, 0.0):
        if any(abs(x) > 1e-9 for x in (e_p, e_v, u, j)):
            assert value < 0.0


def test_abs_branch_monotone_in_each_argument():
    base = (1.0, 1.0, 1.0, 10.0)
    for i in range(4):
        lo = list(base)
        hi = list(base)
        hi[i] = base[i] * 2
        assert abs_branch(*hi) < abs_branch(*lo)


def test_episode_return_examples():
    assert episode_return([0.0, 0.0, 0.0], 1.0) == 0.0
    assert episode_return([-0.1, -0.2], 1.0) == pytest.approx(-0.3)
    assert episode_return([-0.1, -0.2], 0.5) == pytest.approx(-0.2)
    assert episode_return([], 0.9) == 0.0


# -- myopic terminal policy -----------------------------------------------------


def obs(e_p=0.0, e_v=0.0, acc=0.0, acc_pred=0.0, u_pred=0.0):
    return FollowerObservation(LocalState(e_p, e_v, acc),
                               PredecessorSignal(acc_pred, u_pred))


def closed_form_quadratic_optimum(acc):
    """argmax of the quadratic branch over u: coupling of u and jerk terms."""
    rho2 = (CFG.dt / CFG.tau[1]) ** 2
    return W.jerk_coef * rho2 * acc / (W.u_coef + W.jerk_coef * rho2)


def test_myopic_zero_state():
    assert myopic_action(obs(), CFG, W) == 0.0


def test_myopic_examples_match_closed_form():
    assert myopic_action(obs(acc=1.2), CFG, W) == pytest.approx(0.8, abs=1.1e-3)
    assert myopic_action(obs(acc=0.3), CFG, W) == pytest.approx(0.2, abs=1.1e-3)


def test_myopic_within_one_cell_of_closed_form():
    rng = np.random.default_rng(1)
    for acc in rng.uniform(-2.0, 2.0, 50):
        got = myopic_action(obs(acc=acc), CFG, W)
        assert abs(got - closed_form_quadratic_optimum(acc)) <= 1e-3 + 1e-12


def test_myopic_batch_matches_scalar():
    rng = np.random.default_rng(2)
    batch = rng.uniform(-1, 1, size=(16, 5))
    got = myopic_action_batch(batch, CFG, W)
    for row, g in zip(batch, got):
        assert g == myopic_action(row, CFG, W)


def test_terminal_reward_is_reward_of_myopic_action():
    rng = np.random.default_rng(3)
    batch = rng.uniform(-1, 1, size=(8, 5))
    tv = terminal_reward_batch(batch, CFG, W)
    for row, value in zip(batch, tv):
        u = myopic_action(row, CFG, W)
        j = (u - row[2]) / CFG.tau[1]
        assert value == r(row[0], row[1], u, j)
