import numpy as np
import pytest

from platoonrl.config import PlatoonConfig, RewardWeights
from platoonrl.lqr import (GainSchedule, LqrProblem, build_problem,
                           riccati_backward, stationarity_threshold,
                           threshold_report)

GOLDEN_GAIN = (np.sqrt(5) - 1) / 2  # scalar a=b=q=r=1 fixed point


def scalar_problem(horizon=200):
    return LqrProblem(A=np.array([[1.0]]), B=np.array([[1.0]]),
                      Q=np.array([[1.0]]), R=1.0, N_cross=np.array([[0.0]]),
                      horizon=horizon)


def test_build_problem_blocks(pconfig, weights):
    prob = build_problem(pconfig, weights)
    # jerk term c*(jT)^2 expands to acc/u quadratic and cross entries
    assert prob.R == pytest.approx(0.3, abs=1e-15)
    assert np.allclose(np.diag(prob.Q), [1.0, 0.1, 0.2], atol=1e-15)
    assert np.allclose(prob.N_cross.ravel(), [0.0, 0.0, -0.2], atol=1e-15)
    assert prob.horizon == pconfig.horizon


def test_build_problem_no_jerk_coupling(pconfig):
    w = RewardWeights(jerk_coef=1e-12)
    prob = build_problem(pconfig, w)
    assert np.allclose(prob.N_cross, 0.0, atol=1e-11)
    assert prob.R == pytest.approx(w.u_coef, abs=1e-11)


def test_gain_invariance_under_cost_scaling(pconfig, weights):
    prob = build_problem(pconfig, weights)
    lam = 5e-3
    scaled = LqrProblem(A=prob.A, B=prob.B, Q=lam * prob.Q, R=lam * prob.R,
                        N_cross=lam * prob.N_cross, horizon=prob.horizon)
    g1 = riccati_backward(prob).gains
    g2 = riccati_backward(scaled).gains
    for k in g1:
        assert np.max(np.abs(g1[k] - g2[k])) <= 1e-12


def test_scalar_golden_ratio():
    sched = riccati_backward(scalar_problem())
    assert sched.gains[1][0] == pytest.approx(GOLDEN_GAIN, abs=1e-6)
    assert sched.P[1][0, 0] == pytest.approx((1 + np.sqrt(5)) / 2, abs=1e-6)


def test_horizon_one_terminal_only():
    sched = riccati_backward(scalar_problem(horizon=1))
    assert sched.gains == {}
    assert sched.P[1][0, 0] == 1.0
    with pytest.raises(ValueError, match="empty"):
        stationarity_threshold(sched, 0.01)


def test_cost_to_go_symmetric_psd(pconfig, weights):
    sched = riccati_backward(build_problem(pconfig, weights))
    for P in sched.P.values():
        assert np.max(np.abs(P - P.T)) <= 1e-12
        assert np.linalg.eigvalsh(P).min() >= -1e-10


def test_non_psd_terminal_rejected():
    prob = LqrProblem(A=np.eye(3), B=np.zeros((3, 1)), Q=-np.eye(3), R=1.0,
                      N_cross=np.zeros((3, 1)), horizon=5)
    with pytest.raises(ValueError, match="semidefinite"):
        riccati_backward(prob)


def test_platoon_gains_stationary_below_threshold(pconfig, weights):
    sched = riccati_backward(build_problem(pconfig, weights))
    m = stationarity_threshold(sched, 0.01)
    assert 1 <= m < pconfig.horizon
    g1 = sched.gains[1]
    for k in range(1, m + 1):
        dev = np.linalg.norm(sched.gains[k] - g1) / np.linalg.norm(g1)
        assert dev < 0.01
    # deviation exceeds the tolerance right above m
    dev_next = np.linalg.norm(sched.gains[m + 1] - g1) / np.linalg.norm(g1)
    assert dev_next >= 0.01


def test_threshold_all_equal_gains():
    gains = {k: np.array([1.0, 2.0, 3.0]) for k in range(1, 10)}
    sched = GainSchedule(gains=gains, P={}, horizon=10)
    assert stationarity_threshold(sched, 0.01) == 9  # K - 1


def test_threshold_zero_tolerance():
    gains = {k: np.array([1.0 + 0.1 * k]) for k in range(1, 6)}
    sched = GainSchedule(gains=gains, P={}, horizon=6)
    assert stationarity_threshold(sched, 0.0) == 0


def test_threshold_report_structure(pconfig, weights):
    report = threshold_report(pconfig, weights, tol=0.01)
    assert set(report) >= {"horizon", "tolerance", "stationary_threshold",
                           "stationary_gain", "gains", "deviations"}
    assert report["stationary_threshold"] >= 1
    assert len(report["gains"]) == pconfig.horizon - 1
