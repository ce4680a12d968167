"""Brute-force Lindblad reference on the full ``2^N``-dimensional Hilbert space.

Validation only: dense matrices, ``N <= 4``. Single-unit basis is
``(up, down)`` with ``sigma_z = diag(1, -1)``; vectorization stacks columns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from .dicke import DickeLayout, DickeState, sector_j2
from .errors import NonUniqueNullSpace, NotPositive
from .lmg import LMGParams
from .state_space import von_neumann_entropy

MAX_UNITS = 4

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)


def _check_n(N: int) -> None:
    if not 1 <= N <= MAX_UNITS:
        raise ValueError(f"oracle supports 1 <= N <= {MAX_UNITS}, got {N}")


def embed(op, site: int, N: int) -> np.ndarray:
    """``op`` acting on unit ``site`` of ``N``."""
    return reduce(np.kron, [op if k == site else np.eye(2) for k in range(N)])


def collective(N: int):
    """Total spin ``(Jx, Jy, Jz, J_+)`` as ``2^N`` matrices."""
    sx = sum(embed(SIGMA_X, i, N) for i in range(N)) / 2
    sy = sum(embed(SIGMA_Y, i, N) for i in range(N)) / 2
    sz = sum(embed(SIGMA_Z, i, N) for i in range(N)) / 2
    return sx, sy, sz, sx + 1j * sy


def dissipator(A) -> np.ndarray:
    """``D[A] rho = A rho A^dag - {A^dag A, rho}/2`` as a column-stacked superoperator."""
    d = A.shape[0]
    eye = np.eye(d)
    AdA = A.conj().T @ A
    return np.kron(A.conj(), A) - 0.5 * np.kron(eye, AdA) - 0.5 * np.kron(AdA.T, eye)


def hamiltonian(p: LMGParams, N: int) -> np.ndarray:
    jx, jy, _, _ = collective(N)
    return p.coupling * (jx @ jx + jy @ jy) / N + p.field * jx


def brute_force_liouvillian(p: LMGParams, N: int) -> np.ndarray:
    """Dense ``4^N`` Liouvillian: LMG Hamiltonian, ``Gamma/N D[J_-]``, ``gamma sum_i D[sigma_+^i]``."""
    _check_n(N)
    H = hamiltonian(p, N)
    eye = np.eye(2**N)
    _, _, _, jp = collective(N)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    L = L + p.collective_rate / N * dissipator(jp.conj().T)
    for i in range(N):
        L = L + p.local_rate * dissipator(embed(SIGMA_PLUS, i, N))
    return L


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(x, d: int) -> np.ndarray:
    return np.asarray(x).reshape(d, d, order="F")


@dataclass(frozen=True)
class FullState:
    N: int
    rho: np.ndarray

    def validate(self, tol: float = 1e-12, perm_tol: float = 1e-10) -> None:
        if abs(np.trace(self.rho) - 1.0) > tol:
            raise NotPositive("trace differs from 1")
        herm = 0.5 * (self.rho + self.rho.conj().T)
        if np.linalg.eigvalsh(herm)[0] < -tol:
            raise NotPositive("state is not positive semidefinite")
        if permutation_residual(self) > perm_tol:
            raise NotPositive("state is not permutation invariant")


def permutation_matrix(perm, N: int) -> np.ndarray:
    """Unitary relabelling unit ``k`` as ``perm[k]``."""
    d = 2**N
    P = np.zeros((d, d))
    for idx in range(d):
        bits = [(idx >> (N - 1 - k)) & 1 for k in range(N)]
        new = [0] * N
        for k in range(N):
            new[perm[k]] = bits[k]
        P[int("".join(map(str, new)), 2), idx] = 1.0
    return P


def permutation_residual(s: FullState) -> float:
    worst = 0.0
    for perm in itertools.permutations(range(s.N)):
        P = permutation_matrix(perm, s.N)
        worst = max(worst, float(np.max(np.abs(P @ s.rho @ P.T - s.rho))))
    return worst


def brute_force_steady_state(p: LMGParams, N: int, null_tol: float = 1e-10) -> FullState:
    """Stationary state from the smallest right singular vector of the dense Liouvillian.

    Raises
    ------
    NonUniqueNullSpace
        If more than one singular value is below ``null_tol`` times the largest.
    """
    L = brute_force_liouvillian(p, N)
    _, s, vh = np.linalg.svd(L)
    if s[-2] < null_tol * s[0]:
        raise NonUniqueNullSpace(f"second singular value {s[-2]:.3e} below tolerance")
    d = 2**N
    rho = unvec(vh[-1].conj(), d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return FullState(N, rho)


def partial_trace_unit(rho, site: int, N: int) -> np.ndarray:
    """Reduced 2x2 state of one unit."""
    t = np.moveaxis(np.asarray(rho).reshape([2] * (2 * N)), (site, N + site), (0, 1))
    rest = 2 ** (N - 1)
    return np.einsum("abkk->ab", t.reshape(2, 2, rest, rest))


def brute_force_entropy(s: FullState) -> float:
    return von_neumann_entropy(s.rho)


def brute_force_mutual_info(s: FullState) -> float:
    """``(sum_i S(rho_i) - S(rho_T)) / N``."""
    local = sum(von_neumann_entropy(partial_trace_unit(s.rho, i, s.N)) for i in range(s.N))
    return (local - von_neumann_entropy(s.rho)) / s.N


def brute_force_magnetization(s: FullState) -> np.ndarray:
    r = partial_trace_unit(s.rho, 0, s.N)
    return np.real([np.trace(r @ a) for a in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


# --------------------------------------------------------------------------
# total-spin basis


def total_spin_basis(N: int):
    """Orthonormal ``|J, Jz, alpha>`` vectors in the product basis.

    Returns ``{j2: array (dim_J, 2J+1, 2^N)}`` with ``Jz`` ascending; the
    ladder phases follow the standard positive ``J_-`` convention.
    """
    _check_n(N)
    _, _, jz, jp = collective(N)
    jm = jp.conj().T
    zdiag = np.real(np.diag(jz))
    out = {}
    for j2 in sector_j2(N):
        J = j2 / 2
        top = np.nonzero(np.abs(zdiag - J) < 1e-12)[0]
        # highest-weight vectors: annihilated by J_+ inside the Jz = J eigenspace
        hw = scipy.linalg.null_space(jp[:, top])
        vecs = np.zeros((hw.shape[1], j2 + 1, 2**N), dtype=complex)
        for a in range(hw.shape[1]):
            v = np.zeros(2**N, dtype=complex)
            v[top] = hw[:, a]
            vecs[a, j2] = v
            m = J
            for k in range(j2, 0, -1):
                v = jm @ v / math.sqrt(J * (J + 1) - m * (m - 1))
                m -= 1
                vecs[a, k - 1] = v
        out[j2] = vecs
    return out


def dicke_to_full(s: DickeState) -> np.ndarray:
    """``sum_J rho_J (x) 1/dim_J`` in the product basis."""
    basis = total_spin_basis(s.N)
    d = 2**s.N
    rho = np.zeros((d, d), dtype=complex)
    for j2, b in s.blocks.items():
        blk = np.diag(b) if b.ndim == 1 else b
        V = basis[j2]
        for a in range(V.shape[0]):
            rho += V[a].T @ blk @ V[a].conj() / V.shape[0]
    return rho


def full_to_dicke(rho, N: int) -> DickeState:
    """Sector blocks ``rho_J[m, m'] = sum_alpha <J m alpha| rho |J m' alpha>``."""
    basis = total_spin_basis(N)
    blocks = {}
    for j2, V in basis.items():
        blocks[j2] = sum(V[a].conj() @ rho @ V[a].T for a in range(V.shape[0]))
    return DickeState(N, blocks)


def liouvillian_in_dicke(p: LMGParams, N: int, x) -> np.ndarray:
    """Brute-force Liouvillian applied to a vectorized Dicke state, projected back."""
    layout = DickeLayout.for_size(N)
    rho = dicke_to_full(DickeState.from_vector(N, x, layout))
    d = 2**N
    out = unvec(brute_force_liouvillian(p, N) @ vec(rho), d)
    return full_to_dicke(out, N).to_vector(layout)
