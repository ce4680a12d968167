import math

import numpy as np
import pytest

from permadyn.errors import DegenerateGround
from permadyn.ground_state import ground_state_mutual_info


@pytest.mark.parametrize("N", [2, 10, 40, 100, 400])
def test_zero_field_gives_ln2(N):
    r = ground_state_mutual_info(-1.0, 0.0, N)
    assert abs(r.mutual_info_per_unit - math.log(2)) < 1e-10
    assert np.allclose(r.magnetization, 0.0, atol=1e-10)


def test_large_field_product_limit():
    r = ground_state_mutual_info(-1.0, 10.0, 40)
    assert r.mutual_info_per_unit < 1e-3
    assert r.magnetization[0] == pytest.approx(-1.0, abs=1e-3)
    r = ground_state_mutual_info(-1.0, -10.0, 40)
    assert r.magnetization[0] == pytest.approx(1.0, abs=1e-3)


def test_decay_faster_for_larger_n():
    assert (ground_state_mutual_info(-1.0, 0.2, 100).mutual_info_per_unit
            < ground_state_mutual_info(-1.0, 0.2, 20).mutual_info_per_unit)


@pytest.mark.parametrize("h", [0.05, 0.3, 1.7])
def test_parity_symmetry(h):
    a = ground_state_mutual_info(-1.0, h, 30).mutual_info_per_unit
    b = ground_state_mutual_info(-1.0, -h, 30).mutual_info_per_unit
    assert abs(a - b) < 1e-10


def test_monotone_in_field():
    vals = [ground_state_mutual_info(-1.0, h, 40).mutual_info_per_unit
            for h in np.linspace(0, 3, 31)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(0 <= v <= math.log(2) + 1e-12 for v in vals)


def test_matches_dense_diagonalization():
    from permadyn.dicke import spin_operators
    N, h = 12, 0.37
    jx, jy, _ = spin_operators(N / 2)
    H = -1.0 * (jx @ jx + jy @ jy) / N + h * jx
    w = np.linalg.eigvalsh(H)
    assert ground_state_mutual_info(-1.0, h, N).energy == pytest.approx(w[0], abs=1e-10)


def test_rejections():
    with pytest.raises(ValueError):
        ground_state_mutual_info(1.0, 0.0, 10)
    with pytest.raises(ValueError):
        ground_state_mutual_info(-1.0, 0.0, 7)
    with pytest.raises(ValueError):
        ground_state_mutual_info(-1.0, 0.0, 0)
    assert issubclass(DegenerateGround, RuntimeError)
