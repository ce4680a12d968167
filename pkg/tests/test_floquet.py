import math

import numpy as np
import pytest
import scipy.linalg

from permadyn.errors import Degenerate, NoCycle
from permadyn.floquet import (classify_multipliers, floquet_analysis, fundamental_matrix,
                              monodromy)
from permadyn.lmg import LMGParams, analytic_cycle_point, analytic_limit_cycle, drift_system
from permadyn.meanfield import (LimitCycle, find_attractor, integrate, linear_drift,
                                zero_drift)


def test_zero_jacobian_gives_identity():
    _, M = fundamental_matrix(zero_drift(3), [0.1, 0.0, 0.2], 4.0)
    assert np.allclose(M, np.eye(3), atol=1e-12)


def test_linear_drift_gives_expm():
    A = np.array([[-0.2, 0.7, 0.1], [-0.7, -0.1, 0.0], [0.05, 0.0, -0.4]])
    _, M = fundamental_matrix(linear_drift(A), [0.1, 0.1, 0.1], 2.5)
    assert np.allclose(M, scipy.linalg.expm(2.5 * A), atol=1e-9)


def _analytic_cycle(p, phase=0.0):
    c = analytic_limit_cycle(p)
    x0 = analytic_cycle_point(p, phase)
    orbit = integrate(drift_system(p), x0, c.period, rtol=1e-11, atol=1e-13)
    return LimitCycle(c.period, orbit, 0.0)


def test_trivial_multiplier_eigenvector(lmg_cycle_params):
    cyc = _analytic_cycle(lmg_cycle_params)
    M = monodromy(drift_system(lmg_cycle_params), cyc)
    g = drift_system(lmg_cycle_params).field(cyc.section_point)
    assert np.allclose(M @ g, g, atol=1e-8)


def test_multipliers_independent_of_phase(lmg_cycle_params):
    sys_ = drift_system(lmg_cycle_params)
    a = np.sort_complex(floquet_analysis(sys_, _analytic_cycle(lmg_cycle_params, 0.0)).multipliers)
    b = np.sort_complex(floquet_analysis(sys_, _analytic_cycle(lmg_cycle_params, 2.1)).multipliers)
    assert np.allclose(a, b, atol=1e-8)


@pytest.mark.parametrize("field", [0.0, 0.5])
def test_lmg_cycle_is_hyperbolic_and_attractive(field):
    p = LMGParams(3.0, field, 2.0, 1.0)
    sys_ = drift_system(p)
    rep = find_attractor(sys_, [0.3, 0.0, 0.8])
    fr = floquet_analysis(sys_, rep)
    assert fr.unit_multiplier_error < 1e-6
    assert fr.is_hyperbolic and fr.is_attractive
    assert fr.det_identity_error < 1e-8
    assert np.sum(np.abs(fr.multipliers - 1) < 1e-6) == 1


def test_fixed_point_rejected():
    p = LMGParams(3.0, 0.0, 0.5, 1.0)
    rep = find_attractor(drift_system(p), [0.3, 0.0, 0.8])
    with pytest.raises(NoCycle):
        floquet_analysis(drift_system(p), rep)


def test_classification_rules():
    assert classify_multipliers([1.0, 0.5, 0.1]) == (0.0, True, True)
    _, hyp, att = classify_multipliers([1.0, 1.5, 0.1])
    assert hyp and not att
    _, hyp, _ = classify_multipliers([1.0, np.exp(0.3j), 0.2])
    assert not hyp
    with pytest.raises(Degenerate):
        classify_multipliers([1.0, 1.0 + 1e-8, 0.3])
    err, hyp, att = classify_multipliers([0.5, 0.4, 0.1])
    assert err == pytest.approx(0.5) and not hyp and not att
