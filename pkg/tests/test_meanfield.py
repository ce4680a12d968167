import math

import numpy as np
import pytest
import scipy.linalg

from permadyn.errors import BlochEscape, BlochOutOfBody
from permadyn.lmg import LMGParams, analytic_limit_cycle, drift_system
from permadyn.meanfield import (FixedPoint, LimitCycle, MeanFieldSettings, attractor_averages,
                                find_attractor, integrate, jacobian_fd_residual, linear_drift,
                                mean_field_analysis, time_average_state, zero_drift)


def test_zero_drift_is_stationary():
    traj = integrate(zero_drift(3), [0.1, 0.2, 0.3], 5.0)
    assert np.allclose(traj.final, [0.1, 0.2, 0.3])


def test_linear_drift_matches_matrix_exponential():
    A = np.array([[-0.3, 1.0, 0.0], [-1.0, -0.3, 0.0], [0.0, 0.0, -0.5]])
    x0 = np.array([0.4, 0.1, -0.3])
    traj = integrate(linear_drift(A), x0, 3.0, rtol=1e-11, atol=1e-13)
    assert np.allclose(traj.final, scipy.linalg.expm(3.0 * A) @ x0, atol=1e-9)
    # dense output agrees with the exact flow between steps
    for t in (0.37, 1.234, 2.9):
        assert np.allclose(traj(t), scipy.linalg.expm(t * A) @ x0, atol=1e-8)


def test_trajectory_integral_of_rotation():
    w = 2.0
    A = np.array([[0.0, w, 0.0], [-w, 0.0, 0.0], [0.0, 0.0, 0.0]])
    traj = integrate(linear_drift(A), [0.5, 0.0, 0.0], 2 * math.pi / w, rtol=1e-11, atol=1e-13)
    assert np.allclose(traj.integral(), 0.0, atol=1e-8)


def test_escape_from_bloch_ball_detected():
    with pytest.raises(BlochEscape):
        integrate(linear_drift(np.eye(3)), [0.5, 0.0, 0.0], 5.0)
    with pytest.raises(BlochOutOfBody):
        integrate(zero_drift(3), [1.0, 1.0, 0.0], 1.0)


def test_higher_dimensional_body_check():
    # d=3 has 8 coordinates; expanding flow leaves the body
    with pytest.raises(BlochEscape):
        integrate(linear_drift(np.eye(8)), np.full(8, 0.05), 10.0)


def test_pumped_fixed_point():
    p = LMGParams(3.0, 0.0, 0.5, 1.0)
    rep = find_attractor(drift_system(p), [0.3, 0.0, 0.8])
    assert isinstance(rep.kind, FixedPoint)
    assert np.allclose(rep.kind.point, [0, 0, 1], atol=1e-8)
    res = mean_field_analysis(drift_system(p), [0.3, 0.0, 0.8])
    assert res.mutual_info == 0.0


def test_analytic_cycle_recovered(lmg_cycle_params):
    sys_ = drift_system(lmg_cycle_params)
    rep = find_attractor(sys_, [0.3, 0.0, 0.8])
    assert isinstance(rep.kind, LimitCycle)
    c = analytic_limit_cycle(lmg_cycle_params)
    assert rep.period == pytest.approx(c.period, rel=1e-8)
    avg = attractor_averages(rep)
    assert np.allclose(avg.mean_bloch, [0, 0, c.m_z], atol=1e-8)
    assert np.allclose(time_average_state(rep), np.diag([(1 + c.m_z) / 2, (1 - c.m_z) / 2]),
                       atol=1e-8)


def test_weakly_damped_focus_is_fixed_point():
    # slowly spiralling stable focus must not be mistaken for a cycle
    rep = find_attractor(drift_system(LMGParams(3.0, 0.5, 1.0, 1.0)), [0.3, 0.0, 0.8])
    assert rep.label == "fixed_point"


def test_jacobian_residual_helper(lmg_field_params, rng):
    sys_ = drift_system(lmg_field_params)
    pts = rng.uniform(-0.5, 0.5, size=(10, 3))
    assert jacobian_fd_residual(sys_, pts) < 1e-6


def test_settings_are_respected():
    s = MeanFieldSettings(quad_nodes=32)
    assert s.quad_nodes == 32
