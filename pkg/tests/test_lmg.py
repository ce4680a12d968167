import math

import numpy as np
import pytest

from permadyn.errors import NoCycle
from permadyn.lmg import (LMGParams, analytic_cycle_point, analytic_limit_cycle,
                          analytic_mutual_info, drift_system, lmg_drift, lmg_jacobian)
from permadyn.meanfield import jacobian_fd_residual


def random_ball(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None] * rng.uniform(0, 1, size=(n, 1)) ** (1 / 3)


@pytest.mark.parametrize("h", [0.0, 0.5, -1.3])
def test_jacobian_against_central_differences(rng, h):
    p = LMGParams(3.0, h, 2.0, 1.0)
    pts = random_ball(rng, 100)
    step = 1e-6
    for x in pts:
        fd = np.empty((3, 3))
        for l in range(3):
            e = np.zeros(3)
            e[l] = step
            fd[:, l] = (lmg_drift(x + e, p) - lmg_drift(x - e, p)) / (2 * step)
        assert np.max(np.abs(fd - lmg_jacobian(x, p))) < 1e-6
    assert jacobian_fd_residual(drift_system(p), pts) < 1e-6


def test_north_pole_is_stationary_at_zero_field():
    p = LMGParams(3.0, 0.0, 2.0, 1.0)
    assert np.allclose(lmg_drift([0, 0, 1], p), 0.0)


def test_analytic_cycle_solves_drift(lmg_cycle_params):
    c = analytic_limit_cycle(lmg_cycle_params)
    for phase in np.linspace(0, 2 * math.pi, 7):
        x = analytic_cycle_point(lmg_cycle_params, phase)
        # d/dt (m sin wt, m cos wt, mz) = w (m cos wt, -m sin wt, 0)
        expected = c.omega * np.array([x[1], -x[0], 0.0])
        assert np.allclose(lmg_drift(x, lmg_cycle_params), expected, atol=1e-14)


def test_analytic_values(lmg_cycle_params):
    c = analytic_limit_cycle(lmg_cycle_params)
    assert c.m_xy == pytest.approx(1 / math.sqrt(2))
    assert c.m_z == 0.5
    assert c.period == pytest.approx(2 * math.pi * 2 / 3)
    assert analytic_mutual_info(lmg_cycle_params) == pytest.approx(0.316559, abs=1e-6)


def test_no_cycle_below_threshold():
    with pytest.raises(NoCycle):
        analytic_limit_cycle(LMGParams(3.0, 0.0, 1.0, 1.0))
    assert analytic_mutual_info(LMGParams(3.0, 0.0, 0.5, 1.0)) == 0.0
    with pytest.raises(ValueError):
        analytic_limit_cycle(LMGParams(3.0, 0.5, 2.0, 1.0))


def test_params_validation():
    with pytest.raises(ValueError):
        LMGParams(3.0, 0.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        LMGParams(3.0, 0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        LMGParams(math.nan)
