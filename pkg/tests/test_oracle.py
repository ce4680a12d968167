import math

import numpy as np
import pytest

from permadyn import dicke as D
from permadyn import oracle as O
from permadyn.lmg import LMGParams

PARAM_SETS = [LMGParams(3.0, 0.5, 2.0, 1.0), LMGParams(3.0, 0.0, 0.5, 1.0),
              LMGParams(3.0, 0.0, 0.0, 1.0), LMGParams(-1.0, 0.8, 3.0, 0.7)]


def test_single_unit_fully_pumped():
    s = O.brute_force_steady_state(LMGParams(3.0, 0.0, 0.0, 1.0), 1)
    assert np.allclose(s.rho, np.diag([1, 0]), atol=1e-12)


def test_bell_dicke_state_mutual_info():
    psi = np.array([0, 1, 1, 0]) / math.sqrt(2)
    s = O.FullState(2, np.outer(psi, psi.conj()))
    assert O.brute_force_mutual_info(s) == pytest.approx(math.log(2), abs=1e-12)


def test_product_state_has_no_mutual_info(rng):
    from conftest import random_density
    parts = [random_density(rng, 2) for _ in range(3)]
    rho = np.kron(np.kron(parts[0], parts[1]), parts[2])
    assert abs(O.brute_force_mutual_info(O.FullState(3, rho))) < 1e-12
    for i in range(3):
        assert np.allclose(O.partial_trace_unit(rho, i, 3), parts[i])


def test_maximally_mixed_two_qubits():
    assert O.brute_force_entropy(O.FullState(2, np.eye(4) / 4)) == pytest.approx(2 * math.log(2))


@pytest.mark.parametrize("p", PARAM_SETS)
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_full_state_invariants(p, N):
    s = O.brute_force_steady_state(p, N)
    s.validate()
    assert O.permutation_residual(s) < 1e-10


@pytest.mark.parametrize("p", PARAM_SETS)
@pytest.mark.parametrize("N", [2, 3, 4])
def test_dicke_solver_matches_oracle(p, N):
    full = O.brute_force_steady_state(p, N)
    st = D.solve(p, N, method="cg")
    r = D.analyze_state(st, p)
    assert np.max(np.abs(O.dicke_to_full(st) - full.rho)) < 1e-8
    assert abs(r.mutual_info - O.brute_force_mutual_info(full)) < 1e-8
    assert abs(D.total_entropy(st) - O.brute_force_entropy(full)) < 1e-8
    assert np.allclose(r.magnetization, O.brute_force_magnetization(full), atol=1e-8)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_liouvillian_action_matches_oracle(N, rng, lmg_field_params):
    L = D.assemble_liouvillian(lmg_field_params, N)
    lay = L.layout
    x = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    x = 0.5 * (x + lay.adjoint(x))
    assert np.allclose(L.matvec(x), O.liouvillian_in_dicke(lmg_field_params, N, x), atol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_total_spin_basis_round_trip(N, rng):
    lay = D.DickeLayout.for_size(N)
    x = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    st = D.DickeState.from_vector(N, x, lay)
    back = O.full_to_dicke(O.dicke_to_full(st), N)
    assert np.allclose(back.to_vector(lay), x, atol=1e-12)


def test_oracle_size_cap():
    with pytest.raises(ValueError):
        O.brute_force_liouvillian(LMGParams(3.0), 5)
