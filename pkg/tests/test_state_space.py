import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permadyn.errors import BlochOutOfBody, DomainError, NotPositive
from permadyn.state_space import (BlochVector, binary_entropy, bloch_from_density,
                                  density_from_bloch, in_bloch_body, level_count, spectrum,
                                  su_basis, von_neumann_entropy)

from conftest import random_density


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basis_is_traceless_hermitian_orthogonal(d):
    v = su_basis(d)
    assert v.shape == (d * d - 1, d, d)
    for a in range(len(v)):
        assert abs(np.trace(v[a])) < 1e-14
        assert np.allclose(v[a], v[a].conj().T)
        for b in range(len(v)):
            assert abs(np.trace(v[a] @ v[b]) - 2.0 * (a == b)) < 1e-13


def test_qubit_basis_is_pauli():
    sx, sy, sz = su_basis(2)
    assert np.allclose(sx, [[0, 1], [1, 0]])
    assert np.allclose(sy, [[0, -1j], [1j, 0]])
    assert np.allclose(sz, [[1, 0], [0, -1]])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_bloch_round_trip(rng, d):
    rho = random_density(rng, d)
    xi = bloch_from_density(rho)
    assert np.allclose(density_from_bloch(xi), rho, atol=1e-12)


def test_qubit_body_is_unit_ball():
    assert in_bloch_body([0.6, 0.0, 0.8])
    assert in_bloch_body([0.0, 0.0, 1.0 + 1e-12], tol=1e-10)
    assert not in_bloch_body([0.0, 0.8, 0.8])
    with pytest.raises(BlochOutOfBody):
        density_from_bloch([1.0, 1.0, 0.0])


def test_bloch_vector_type():
    b = BlochVector(2, (0.1, 0.2, 0.3))
    assert np.allclose(b.as_array(), [0.1, 0.2, 0.3])
    assert BlochVector.from_array([0, 0, 1]).d == 2
    assert level_count(8) == 3
    with pytest.raises(ValueError):
        BlochVector(2, (0.1, 0.2))
    with pytest.raises(ValueError):
        level_count(5)


def test_entropy_values():
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-15)
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2 * math.log(2), abs=1e-14)
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert binary_entropy(0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert binary_entropy(1.0) == 0.0
    with pytest.raises(DomainError):
        binary_entropy(1.1)


def test_spectrum_rejects_negative():
    with pytest.raises(NotPositive):
        spectrum(np.diag([1.1, -0.1]))
    w = spectrum(np.diag([0.25, 0.75]))
    assert np.allclose(w, [0.75, 0.25])


def test_binary_entropy_matches_density_entropy(rng):
    for _ in range(20):
        v = rng.normal(size=3)
        v *= rng.uniform() / np.linalg.norm(v)
        assert binary_entropy(np.linalg.norm(v)) == pytest.approx(
            von_neumann_entropy(density_from_bloch(v)), abs=1e-12)


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.0, 1.0), d=st.sampled_from([2, 3, 4]))
def test_entropy_concavity(seed, lam, d):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, d, rank=rng.integers(1, d + 1)), random_density(rng, d)
    mix = lam * a + (1 - lam) * b
    assert von_neumann_entropy(mix) >= (lam * von_neumann_entropy(a)
                                        + (1 - lam) * von_neumann_entropy(b)) - 1e-10


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_entropy_bounded_in_ball(v):
    v = np.asarray(v)
    r = np.linalg.norm(v)
    if r > 1:
        v = v / r
    s = von_neumann_entropy(density_from_bloch(v))
    assert -1e-12 <= s <= math.log(2) + 1e-12
