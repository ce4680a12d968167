import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from permadyn import _backend, _pykernels

PARAMS = (3.0, 0.5, 2.0, 1.0)
compiled = pytest.mark.skipif(_backend.compiled_kernels is None,
                              reason="compiled kernels not built")


def test_backend_name_consistent():
    assert _backend.BACKEND in ("cython", "python")
    assert (_backend.BACKEND == "cython") == _backend.COMPILED


def test_pure_python_fallback_selectable():
    env = dict(os.environ, PERMADYN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import permadyn; print(permadyn.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@compiled
@pytest.mark.parametrize("variational", [False, True])
def test_integrators_agree(variational):
    y0 = np.array([0.3, 0.0, 0.8])
    if variational:
        y0 = np.concatenate([y0, np.eye(3).ravel()])
    kw = dict(rtol=1e-10, atol=1e-12, variational=variational)
    tp, yp, fp, sp_ = _pykernels.dp45_lmg(y0, 0.0, 15.0, *PARAMS, **kw)
    tc, yc, fc, sc = _backend.compiled_kernels.dp45_lmg(y0, 0.0, 15.0, *PARAMS, **kw)
    assert sp_ == sc == _backend.OK
    # the embedded error estimate is a near-cancellation, so rounding-order
    # differences perturb step sizes slightly; solutions agree to tolerance
    assert abs(len(tp) - len(tc)) <= 0.02 * len(tp)
    assert tp[-1] == tc[-1] == 15.0
    assert np.allclose(yp[-1], yc[-1], atol=1e-8)
    assert np.allclose(tp[:2], tc[:2], rtol=1e-12)


@compiled
@pytest.mark.parametrize("N", [1, 2, 5, 12])
def test_assembly_agrees(N):
    def csr(parts):
        r, c, v = parts
        n = int(max(r.max(), c.max())) + 1
        return sp.csr_matrix((v, (r, c)), shape=(n, n))
    a = csr(_pykernels.dicke_liouvillian_coo(N, *PARAMS))
    b = csr(_backend.compiled_kernels.dicke_liouvillian_coo(N, *PARAMS))
    assert abs(a - b).max() < 1e-14


def test_escape_status_reported():
    y0 = np.array([0.0, 0.0, 0.99])
    # anti-damped pumping drives m_z above 1 quickly
    _, _, _, status = _pykernels.dp45_lmg(y0, 0.0, 50.0, 0.0, 0.0, 0.0, -1.0, rtol=1e-8,
                                          atol=1e-10)
    assert status == _backend.ESCAPE
