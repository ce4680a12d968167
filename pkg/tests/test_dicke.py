import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permadyn import dicke as D
from permadyn.errors import CGNotConverged, DimensionCapExceeded, NotPositive
from permadyn.lmg import LMGParams


@pytest.mark.parametrize("N,J,dim", [(2, 1, 1), (2, 0, 1), (4, 1, 3), (4, 2, 1), (4, 0, 2),
                                     (3, 0.5, 2), (3, 1.5, 1)])
def test_dimension_examples(N, J, dim):
    assert D.dicke_dimension(N, J) == dim


@pytest.mark.parametrize("N", range(1, 31))
def test_sector_bookkeeping_exact(N):
    assert sum((j2 + 1) * D.dicke_dimension(N, j2 / 2) for j2 in D.sector_j2(N)) == 2**N


def test_dimension_rejects_invalid_sector():
    for N, J in [(4, 0.5), (3, 1), (2, 2), (2, -1), (2, 0.3)]:
        with pytest.raises(IndexError):
            D.dicke_dimension(N, J)


def test_log_dimension_large_n():
    N = 1600
    for j2 in (0, 400, 1600):
        exact = D.dicke_dimension(N, j2 / 2)
        assert D.log_dicke_dimension(N, j2) == pytest.approx(math.log(exact), rel=1e-12, abs=1e-9)


@pytest.mark.parametrize("J", [0.5, 1, 1.5, 2, 3.5, 7])
def test_spin_algebra(J):
    jx, jy, jz = D.spin_operators(J)
    assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-12
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.allclose(casimir, J * (J + 1) * np.eye(int(2 * J + 1)))
    jp = jx + 1j * jy
    m = np.arange(-J, J)
    assert np.allclose(np.diag(jp, -1), np.sqrt(J * (J + 1) - m * (m + 1)))


def test_spin_half_and_one():
    jx, jy, jz = D.spin_operators(0.5)
    assert np.allclose(jz, np.diag([-0.5, 0.5]))
    assert np.allclose(jx, 0.5 * np.array([[0, 1], [1, 0]]))
    assert np.allclose(D.spin_operators(1)[2], np.diag([-1, 0, 1]))


@pytest.mark.parametrize("N", [1, 2, 3, 4, 7, 10])
def test_index_formula(N):
    lay = D.DickeLayout.for_size(N)
    seen = []
    for j2 in lay.j2s:
        J = j2 / 2
        for a in range(j2 + 1):
            for b in range(j2 + 1):
                Jz, Jzp = a - J, b - J
                formula = J * (2 * J + 1) * (2 * J - 1) / 3 + (2 * J + 1) * (J + Jz) + J + Jzp
                if N % 2 == 0:
                    assert lay.index(J, Jz, Jzp) == round(formula)
                seen.append(lay.index(J, Jz, Jzp))
    assert seen == list(range(lay.dim))


def test_sector_offsets_are_cumulative():
    for N in (5, 6):
        lay = D.DickeLayout.for_size(N)
        for j2 in lay.j2s:
            assert lay.offsets[j2] == sum((k + 1) ** 2 for k in lay.j2s if k < j2)


def _random_hermitian(lay, rng):
    x = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    return 0.5 * (x + lay.adjoint(x))


@pytest.mark.parametrize("N", range(1, 11))
def test_trace_preservation(N, rng):
    p = LMGParams(3.0, 0.5, 2.0, 1.0)
    L = D.assemble_liouvillian(p, N)
    t = L.trace_vector()
    assert np.max(np.abs(t @ L.matrix)) < 1e-10 * max(1, N)
    for _ in range(3):
        assert abs(t @ L.matvec(_random_hermitian(L.layout, rng))) < 1e-10


@pytest.mark.parametrize("N", [1, 2, 5, 8])
def test_matrix_free_matches_stored(N, rng, lmg_field_params):
    A = D.assemble_liouvillian(lmg_field_params, N)
    B = D.assemble_liouvillian(lmg_field_params, N, matrix_free=True)
    x = rng.normal(size=A.dimension) + 1j * rng.normal(size=A.dimension)
    assert np.allclose(A.matvec(x), B.matvec(x), atol=1e-12)
    assert np.allclose(A.rmatvec(x), B.rmatvec(x), atol=1e-12)
    assert np.allclose(A.column_norms_sq(), B.column_norms_sq(), atol=1e-11)


def test_memory_cap(monkeypatch):
    monkeypatch.setenv("PERMADYN_MEM_CAP_MB", "1")
    with pytest.raises(DimensionCapExceeded):
        D.assemble_liouvillian(LMGParams(3.0, 0.5, 2.0, 1.0), 40)
    L = D.assemble_liouvillian(LMGParams(3.0, 0.5, 2.0, 1.0), 40, matrix_free=True)
    assert L.matrix_free


def test_single_unit_pumping():
    p = LMGParams(3.0, 0.0, 0.0, 1.0)
    s = D.steady_state(D.assemble_liouvillian(p, 1))
    assert np.allclose(s.blocks[1], np.diag([0, 1]), atol=1e-12)
    d = D.steady_state_diagonal(p, 1)
    assert np.allclose(d.blocks[1], [0, 1])
    assert abs(D.total_entropy(s)) < 1e-14
    assert np.allclose(D.local_magnetization(s), [0, 0, 1])
    assert D.finite_mutual_info(LMGParams(3.0, 0.5, 2.0, 1.0), 1) == 0.0


@pytest.mark.parametrize("N", [2, 5, 9])
def test_solved_state_contract(N, lmg_field_params):
    s = D.solve(lmg_field_params, N)
    s.validate(1e-10)
    assert s.info["residual"] < 1e-9
    L = D.assemble_liouvillian(lmg_field_params, N)
    x = s.to_vector()
    assert np.linalg.norm(L.matvec(x)) / np.linalg.norm(x) < 1e-9
    r = D.analyze_state(s, lmg_field_params)
    assert r.local_entropy >= r.total_entropy_per_unit - 1e-9


def test_cg_reports_failure(lmg_field_params):
    with pytest.raises(CGNotConverged) as exc:
        D.steady_state(D.assemble_liouvillian(lmg_field_params, 10), maxiter=3)
    assert exc.value.residual > 1e-9


@pytest.mark.parametrize("N", [4, 20, 35, 50])
def test_diagonal_solver_matches_cg(N, lmg_cycle_params):
    diag = D.steady_state_diagonal(lmg_cycle_params, N)
    cg = D.steady_state(D.assemble_liouvillian(lmg_cycle_params, N))
    for j2 in diag.blocks:
        assert np.max(np.abs(diag.populations(j2) - cg.populations(j2))) < 1e-8
    total = sum(float(np.sum(b)) for b in diag.blocks.values())
    assert abs(total - 1.0) < 1e-12


def test_rate_matrix_conserves_probability(lmg_cycle_params):
    W, _ = D.rate_matrix(lmg_cycle_params, 17)
    assert np.max(np.abs(np.asarray(W.sum(axis=0)))) < 1e-12


def test_diagonal_solver_requires_zero_field(lmg_field_params):
    with pytest.raises(ValueError):
        D.steady_state_diagonal(lmg_field_params, 4)


def test_entropy_examples():
    assert D.total_entropy(D.DickeState.pure_dicke(6, 3, 1)) == 0.0
    mixed = D.DickeState.maximally_mixed(2)
    assert mixed.weights == {0: 0.25, 2: 0.75}
    assert D.total_entropy(mixed) == pytest.approx(2 * math.log(2), abs=1e-14)
    assert np.allclose(D.local_magnetization(mixed), 0.0)
    full = D.DickeState(2, {0: np.array([[0.25]]), 2: np.eye(3) * 0.25})
    assert D.total_entropy(full) == pytest.approx(2 * math.log(2), abs=1e-14)
    assert np.allclose(D.local_magnetization(D.DickeState.pure_dicke(5, 2.5, 2.5)), [0, 0, 1])


@pytest.mark.parametrize("N", [3, 8, 40])
def test_maximally_mixed_entropy(N):
    assert D.total_entropy(D.DickeState.maximally_mixed(N)) == pytest.approx(N * math.log(2),
                                                                              rel=1e-12)


def test_validate_rejects_bad_state():
    with pytest.raises(NotPositive):
        D.DickeState(2, {0: np.array([[0.5]]), 2: np.diag([0.7, 0.0, -0.2])}).validate()
    with pytest.raises(NotPositive):
        D.DickeState(2, {0: np.array([[0.5]]), 2: np.zeros((3, 3))}).validate()


def test_magnetization_approaches_mean_field(lmg_cycle_params):
    mz = [D.finite_analysis(lmg_cycle_params, N).magnetization[2] for N in (100, 200, 400)]
    assert all(0.5 < m < 1 for m in mz)
    assert mz[0] > mz[1] > mz[2]


@settings(max_examples=25, deadline=None)
@given(G=st.floats(0.0, 4.0), h=st.floats(-1.0, 1.0), N=st.integers(1, 7))
def test_concavity_bound_on_solutions(G, h, N):
    p = LMGParams(3.0, h, G, 1.0)
    r = D.finite_analysis(p, N, method="cg")
    assert r.local_entropy >= r.total_entropy_per_unit - 1e-9
    assert np.all(np.abs(r.magnetization) <= 1 + 1e-10)
