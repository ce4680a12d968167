"""Exact finite-N steady states of the LMG Lindbladian in the Dicke basis.

A permutation-invariant state of ``N`` spins-1/2 is stored as one
``(2J+1) x (2J+1)`` block per total angular momentum ``J``; the full density
matrix is ``sum_J rho_J (x) 1/dim_J``. Angular momenta are carried as the
integer ``j2 = 2J`` throughout.

Vectorized layout: sectors in increasing ``J``, each block row-major with row
``Jz`` and column ``Jz'`` running from ``-J`` to ``J``. The 0-based position
of ``rho[J, Jz, Jz']`` is ``J(2J+1)(2J-1)/3 + (2J+1)(J+Jz) + J+Jz'``.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _backend
from .errors import (CGNotConverged, DimensionCapExceeded, NonUniqueNullSpace, NotPositive,
                     SingularRateMatrix)
from .lmg import LMGParams
from .state_space import binary_entropy, density_from_bloch, shannon

log = logging.getLogger(__name__)

MATRIX_FREE_THRESHOLD = 1_000_000
DEFAULT_MEM_CAP_MB = 8192


# --------------------------------------------------------------------------
# bookkeeping


def _twice(J) -> int:
    j2 = 2 * J
    if abs(j2 - round(j2)) > 1e-9:
        raise IndexError(f"J={J} is not a half-integer")
    return int(round(j2))


def sector_j2(N: int):
    """Allowed ``2J`` values for ``N`` spins, ascending."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    return list(range(N % 2, N + 1, 2))


def _check_sector(N: int, j2: int) -> None:
    if N < 1 or j2 < 0 or j2 > N or (N - j2) % 2:
        raise IndexError(f"J={j2 / 2:g} is not an allowed sector for N={N}")


def dicke_dimension(N: int, J) -> int:
    """Multiplicity of the spin-``J`` irrep in ``N`` spins-1/2 (exact integer)."""
    j2 = _twice(J)
    _check_sector(N, j2)
    k = (N - j2) // 2
    # (2J+1) N! / ((N/2+J+1)! (N/2-J)!) = (2J+1) C(N, k) / (N - k + 1)
    num = (j2 + 1) * math.comb(N, k)
    q, r = divmod(num, N - k + 1)
    assert r == 0
    return q


def log_dicke_dimension(N: int, j2: int) -> float:
    k = (N - j2) // 2
    return (math.log(j2 + 1) + math.lgamma(N + 1) - math.lgamma(N - k + 2) - math.lgamma(k + 1))


@lru_cache(maxsize=256)
def _spin_ops_cached(j2: int):
    J = j2 / 2
    m = np.arange(j2 + 1) - J
    lad = np.sqrt(np.maximum(J * (J + 1) - m[:-1] * (m[:-1] + 1), 0.0))
    jp = np.diag(lad, -1).astype(complex)
    jx = 0.5 * (jp + jp.T)
    jy = -0.5j * (jp - jp.T)
    jz = np.diag(m).astype(complex)
    for a in (jx, jy, jz):
        a.setflags(write=False)
    return jx, jy, jz


def spin_operators(J):
    """Spin-``J`` matrices ``(Jx, Jy, Jz)`` in the ``Jz`` basis ordered ``-J..J``."""
    j2 = _twice(J)
    if j2 < 0:
        raise ValueError("J must be non-negative")
    return tuple(a.copy() for a in _spin_ops_cached(j2))


@dataclass(frozen=True)
class DickeLayout:
    N: int
    j2s: tuple
    offsets: dict
    dim: int

    @classmethod
    def for_size(cls, N: int) -> "DickeLayout":
        j2s = tuple(sector_j2(N))
        offsets, off = {}, 0
        for j2 in j2s:
            offsets[j2] = off
            off += (j2 + 1) ** 2
        return cls(N, j2s, offsets, off)

    def index(self, J, Jz, Jzp) -> int:
        """0-based vector position of ``rho[J, Jz, Jz']``."""
        j2 = _twice(J)
        _check_sector(self.N, j2)
        a, b = _twice(Jz), _twice(Jzp)
        if abs(a) > j2 or abs(b) > j2 or (a - j2) % 2 or (b - j2) % 2:
            raise IndexError(f"(Jz, Jz')=({Jz}, {Jzp}) invalid for J={J}")
        return self.offsets[j2] + (j2 + 1) * ((j2 + a) // 2) + (j2 + b) // 2

    def trace_vector(self) -> np.ndarray:
        t = np.zeros(self.dim)
        for j2 in self.j2s:
            n = j2 + 1
            t[self.offsets[j2] + np.arange(n) * (n + 1)] = 1.0
        return t

    def block(self, x, j2):
        n = j2 + 1
        s = self.offsets[j2]
        return x[s:s + n * n].reshape(n, n)

    def adjoint(self, x) -> np.ndarray:
        """Block-wise Hermitian conjugate of a vectorized state."""
        out = np.empty_like(x)
        for j2 in self.j2s:
            n = j2 + 1
            s = self.offsets[j2]
            out[s:s + n * n] = x[s:s + n * n].reshape(n, n).conj().T.ravel()
        return out


# --------------------------------------------------------------------------
# states


@dataclass
class DickeState:
    """Block state ``{j2: rho_J}``.

    A block is either a full ``(2J+1, 2J+1)`` matrix or a 1-D array holding
    the diagonal populations ``p[J, Jz]`` (``Jz`` ascending).
    """

    N: int
    blocks: Dict[int, np.ndarray]
    info: dict = field(default_factory=dict)

    @property
    def is_diagonal(self) -> bool:
        return all(b.ndim == 1 for b in self.blocks.values())

    def weight(self, j2: int) -> float:
        b = self.blocks[j2]
        return float(np.real(np.sum(b) if b.ndim == 1 else np.trace(b)))

    @property
    def weights(self) -> Dict[int, float]:
        return {j2: self.weight(j2) for j2 in self.blocks}

    def populations(self, j2: int) -> np.ndarray:
        b = self.blocks[j2]
        return np.real(b).copy() if b.ndim == 1 else np.real(np.diag(b)).copy()

    def to_vector(self, layout: Optional[DickeLayout] = None) -> np.ndarray:
        layout = layout or DickeLayout.for_size(self.N)
        x = np.zeros(layout.dim, dtype=complex)
        for j2, b in self.blocks.items():
            n = j2 + 1
            s = layout.offsets[j2]
            full = np.diag(b) if b.ndim == 1 else b
            x[s:s + n * n] = full.ravel()
        return x

    @classmethod
    def from_vector(cls, N: int, x, layout: Optional[DickeLayout] = None, **info) -> "DickeState":
        layout = layout or DickeLayout.for_size(N)
        return cls(N, {j2: layout.block(x, j2).copy() for j2 in layout.j2s}, dict(info))

    @classmethod
    def pure_dicke(cls, N: int, J, Jz) -> "DickeState":
        j2, a = _twice(J), _twice(Jz)
        _check_sector(N, j2)
        blocks = {k: np.zeros(k + 1) for k in sector_j2(N)}
        blocks[j2][(j2 + a) // 2] = 1.0
        return cls(N, blocks)

    @classmethod
    def maximally_mixed(cls, N: int) -> "DickeState":
        blocks = {}
        total = 2**N
        for j2 in sector_j2(N):
            # each of the (2J+1) dim_J states carries 2^-N
            blocks[j2] = np.full(j2 + 1, dicke_dimension(N, j2 / 2) / total)
        return cls(N, blocks)

    def validate(self, tol: float = 1e-10) -> None:
        """Check unit trace, Hermiticity and positivity of the normalized blocks."""
        total = sum(self.weights.values())
        if abs(total - 1.0) > tol:
            raise NotPositive(f"state trace {total!r} differs from 1")
        for j2, b in self.blocks.items():
            if b.ndim == 1:
                if np.min(np.real(b)) < -tol:
                    raise NotPositive(f"negative population in sector 2J={j2}")
                continue
            if np.max(np.abs(b - b.conj().T)) > tol:
                raise NotPositive(f"block 2J={j2} not Hermitian")
            w = self.weight(j2)
            if w < -tol:
                raise NotPositive(f"negative weight in sector 2J={j2}")
            if w > tol and np.linalg.eigvalsh(0.5 * (b + b.conj().T))[0] / w < -tol:
                raise NotPositive(f"block 2J={j2} not positive semidefinite")


def total_entropy(s: DickeState) -> float:
    """Entropy of the full N-spin state, ``sum_J p_J [-ln p_J + S(rho_J/p_J) + ln dim_J]``."""
    S = 0.0
    for j2, b in s.blocks.items():
        if b.ndim == 1:
            pops = np.clip(np.real(b), 0.0, None)
            pJ = float(pops.sum())
            if pJ <= 0.0:
                continue
            inner = shannon(pops / pJ)
        else:
            # negativity is judged against the unit total trace, not p_J, so
            # nearly empty sectors tolerate solver-level noise
            w = np.linalg.eigvalsh(0.5 * (b + b.conj().T))
            if w[0] < -1e-8:
                raise NotPositive(f"block 2J={j2} has eigenvalue {w[0]:.3e}")
            w = np.clip(w, 0.0, None)
            pJ = float(w.sum())
            if pJ <= 1e-300:
                continue
            inner = shannon(w / pJ)
        S += pJ * (-math.log(pJ) + inner + log_dicke_dimension(s.N, j2))
    return S


def local_magnetization(s: DickeState) -> np.ndarray:
    """Single-unit Bloch vector ``(2/N) sum_J Tr(rho_J J_a)``."""
    m = np.zeros(3)
    for j2, b in s.blocks.items():
        J = j2 / 2
        if b.ndim == 1:
            m[2] += float(np.real(b) @ (np.arange(j2 + 1) - J))
            continue
        jx, jy, jz = _spin_ops_cached(j2)
        m[0] += np.real(np.sum(b * jx.T))
        m[1] += np.real(np.sum(b * jy.T))
        m[2] += np.real(np.sum(b * jz.T))
    return 2.0 * m / s.N


def local_state(s: DickeState) -> np.ndarray:
    m = local_magnetization(s)
    r = np.linalg.norm(m)
    if r > 1.0:
        m = m / r
    return density_from_bloch(m)


def local_entropy(s: DickeState) -> float:
    return binary_entropy(min(float(np.linalg.norm(local_magnetization(s))), 1.0))


# --------------------------------------------------------------------------
# Liouvillian


def mem_cap_mb() -> float:
    try:
        return float(os.environ.get("PERMADYN_MEM_CAP_MB", DEFAULT_MEM_CAP_MB))
    except ValueError:
        return float(DEFAULT_MEM_CAP_MB)


def estimated_matrix_mb(N: int) -> float:
    dim = DickeLayout.for_size(N).dim
    # up to 9 entries per row, complex value + int32/int64 indices during assembly
    return 9 * dim * (16 + 16) / 2**20


class SparseSuperoperator:
    """Liouvillian on the vectorized Dicke layout, stored (CSR) or matrix-free."""

    def __init__(self, layout: DickeLayout, params: LMGParams, matrix=None):
        self.layout = layout
        self.params = params
        self.matrix = matrix
        self._matrix_free = None if matrix is not None else _MatrixFree(layout, params)

    @property
    def N(self) -> int:
        return self.layout.N

    @property
    def dimension(self) -> int:
        return self.layout.dim

    @property
    def matrix_free(self) -> bool:
        return self.matrix is None

    def matvec(self, x) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ x
        return self._matrix_free.apply(x)

    def rmatvec(self, y) -> np.ndarray:
        """Action of the adjoint ``L^dagger``."""
        if self.matrix is not None:
            return self.matrix.conj().T @ y
        return self._matrix_free.apply_adjoint(y)

    __matmul__ = matvec

    def column_norms_sq(self) -> np.ndarray:
        """``diag(L^dagger L)``."""
        if self.matrix is not None:
            m = self.matrix
            return np.asarray(abs(m).power(2).sum(axis=0)).ravel()
        return self._matrix_free.column_norms_sq()

    def trace_vector(self) -> np.ndarray:
        return self.layout.trace_vector()

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.toarray()
        eye = np.eye(self.dimension, dtype=complex)
        return np.column_stack([self.matvec(e) for e in eye])


def assemble_liouvillian(p: LMGParams, N: int, matrix_free: Optional[bool] = None,
                         cap_mb: Optional[float] = None) -> SparseSuperoperator:
    """Sparse Dicke-basis Liouvillian: Hamiltonian, collective decay ``Gamma/N D[J_-]``
    and local ``sigma_+`` pumping at rate ``gamma``.

    ``matrix_free=None`` stores the matrix below ``10**6`` rows and applies it
    on the fly above.

    Raises
    ------
    DimensionCapExceeded
        If a stored matrix would exceed ``PERMADYN_MEM_CAP_MB``; pass
        ``matrix_free=True`` or raise the cap.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    layout = DickeLayout.for_size(N)
    if matrix_free is None:
        matrix_free = layout.dim > MATRIX_FREE_THRESHOLD
    if matrix_free:
        return SparseSuperoperator(layout, p)
    cap = mem_cap_mb() if cap_mb is None else cap_mb
    need = estimated_matrix_mb(N)
    if need > cap:
        raise DimensionCapExceeded(
            f"Liouvillian for N={N} needs ~{need:.0f} MB (> cap {cap:.0f} MB); "
            "use matrix_free=True or raise PERMADYN_MEM_CAP_MB")
    rows, cols, vals = _backend.dicke_liouvillian_coo(N, *p.as_tuple())
    L = sp.csr_matrix((vals, (rows, cols)), shape=(layout.dim, layout.dim))
    return SparseSuperoperator(layout, p, L)


class _MatrixFree:
    """Block-wise application of the Liouvillian without storing it."""

    def __init__(self, layout: DickeLayout, p: LMGParams):
        self.layout = layout
        self.p = p
        N = layout.N
        self.ops = {}
        for j2 in layout.j2s:
            J = j2 / 2
            m = np.arange(j2 + 1) - J
            jx, _, _ = _spin_ops_cached(j2)
            H = np.diag(p.coupling * (J * (J + 1) - m * m) / N).astype(complex) + p.field * jx
            jm = np.diag(np.sqrt(np.maximum(J * (J + 1) - m[:-1] * (m[:-1] + 1), 0.0)), 1)
            jpjm = J * (J + 1) - m * m + m
            depl = -0.5 * p.local_rate * (N - m[:, None] - m[None, :])
            self.ops[j2] = (H, jm, jpjm, depl)
        # local pumping couplings: target block j2 gets coef * source[a-1+k, b-1+k]
        self.pump = {}
        for j2 in layout.j2s:
            J = j2 / 2
            m = np.arange(j2 + 1) - J
            entries = []
            for k in (-1, 0, 1):
                s2 = j2 + 2 * k
                if s2 not in layout.offsets:
                    continue
                Js = s2 / 2
                x = m - 1.0
                valid = np.abs(x) <= Js
                if k == 1:
                    c = np.sqrt(np.maximum((Js - x) * (Js - x - 1), 0.0))
                    pref = (N / 2 + Js + 1) / (Js * (2 * Js + 1))
                elif k == 0:
                    if s2 == 0:
                        continue
                    c = np.sqrt(np.maximum((Js - x) * (Js + x + 1), 0.0))
                    pref = (N / 2 + 1) / (Js * (Js + 1))
                else:
                    c = np.sqrt(np.maximum((Js + x + 1) * (Js + x + 2), 0.0))
                    pref = (N / 2 - Js) / ((Js + 1) * (2 * Js + 1))
                c = np.where(valid, c, 0.0)
                idx = np.nonzero(c > 0.0)[0]
                if idx.size == 0:
                    continue
                src = idx - 1 + k
                coef = 0.5 * p.local_rate * pref * np.outer(c[idx], c[idx])
                entries.append((s2, idx, src, coef))
            self.pump[j2] = entries

    def _apply(self, x, adjoint: bool) -> np.ndarray:
        lay = self.layout
        G = self.p.collective_rate / lay.N
        out = np.zeros(lay.dim, dtype=complex)
        for j2 in lay.j2s:
            H, jm, jpjm, depl = self.ops[j2]
            r = lay.block(x, j2)
            o = lay.block(out, j2)
            if not adjoint:
                o += -1j * (H @ r - r @ H)
                o += G * (jm @ r @ jm.T) - 0.5 * G * (jpjm[:, None] + jpjm[None, :]) * r
            else:
                o += 1j * (H @ r - r @ H)
                o += G * (jm.T @ r @ jm) - 0.5 * G * (jpjm[:, None] + jpjm[None, :]) * r
            o += depl * r
            for s2, idx, src, coef in self.pump[j2]:
                if not adjoint:
                    o[np.ix_(idx, idx)] += coef * lay.block(x, s2)[np.ix_(src, src)]
                else:
                    lay.block(out, s2)[np.ix_(src, src)] += coef * r[np.ix_(idx, idx)]
        return out

    def apply(self, x) -> np.ndarray:
        return self._apply(np.asarray(x, dtype=complex), False)

    def apply_adjoint(self, y) -> np.ndarray:
        return self._apply(np.asarray(y, dtype=complex), True)

    def column_norms_sq(self) -> np.ndarray:
        lay = self.layout
        G = self.p.collective_rate / lay.N
        out = np.zeros(lay.dim)
        for j2 in lay.j2s:
            H, jm, jpjm, depl = self.ops[j2]
            n = j2 + 1
            # every stored entry lands in a distinct row, so squares add per column
            diag = (-1j * (np.real(np.diag(H))[:, None] - np.real(np.diag(H))[None, :])
                    - 0.5 * G * (jpjm[:, None] + jpjm[None, :]) + depl)
            col = np.abs(diag) ** 2
            off = np.abs(np.diag(H, 1)) ** 2
            # H couplings: column (c, b) feeds rows (c -+ 1, b); column (a, c) feeds rows (a, c -+ 1)
            hcol = np.zeros(n)
            hcol[:-1] += off
            hcol[1:] += off
            col += hcol[:, None] + hcol[None, :]
            lad2 = np.diag(jm, 1) ** 2
            l2 = np.zeros(n)
            l2[1:] = lad2
            col += G**2 * l2[:, None] * l2[None, :]
            o = out[lay.offsets[j2]:lay.offsets[j2] + n * n].reshape(n, n)
            o += col
        for j2 in lay.j2s:
            for s2, idx, src, coef in self.pump[j2]:
                ns = s2 + 1
                o = out[lay.offsets[s2]:lay.offsets[s2] + ns * ns].reshape(ns, ns)
                o[np.ix_(src, src)] += np.abs(coef) ** 2
        return out


# --------------------------------------------------------------------------
# steady states


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float
    method: str


def _pcg_steady(L: SparseSuperoperator, x0, tol: float, maxiter: int):
    """Preconditioned CG on ``(L^dagger L + t t^dagger) x = t``.

    Stops once ``||L x|| <= tol ||x||`` and ``|t.x - 1| <= tol``.
    Returns ``(x, iterations, relative residual)``.
    """
    t = L.trace_vector()
    dinv = 1.0 / (L.column_norms_sq() + t * t)
    x = np.array(x0, dtype=complex)
    Lx = L.matvec(x)
    tx = t @ x
    r = t - (L.rmatvec(Lx) + t * tx)
    z = dinv * r
    p = z.copy()
    rz = np.vdot(r, z).real
    Lp = L.matvec(p)
    it = 0
    rel = np.linalg.norm(Lx) / np.linalg.norm(x)
    while it < maxiter:
        if rel <= tol and abs(tx - 1.0) <= tol:
            break
        tp = t @ p
        Ap = L.rmatvec(Lp) + t * tp
        denom = np.vdot(p, Ap).real
        if denom <= 0.0:
            break
        alpha = rz / denom
        x += alpha * p
        Lx += alpha * Lp
        tx += alpha * tp
        r -= alpha * Ap
        z = dinv * r
        rz_new = np.vdot(r, z).real
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
        Lp = L.matvec(p)
        it += 1
        rel = np.linalg.norm(Lx) / np.linalg.norm(x)
        if it % 200 == 0:
            # refresh recurrences against drift
            Lx = L.matvec(x)
            rel = np.linalg.norm(Lx) / np.linalg.norm(x)
    return x, it, rel


def fully_pumped_vector(layout: DickeLayout) -> np.ndarray:
    x = np.zeros(layout.dim, dtype=complex)
    x[layout.index(layout.N / 2, layout.N / 2, layout.N / 2)] = 1.0
    return x


def steady_state(L: SparseSuperoperator, tol: float = 1e-9, maxiter: Optional[int] = None,
                 x0=None) -> DickeState:
    """Unique steady state of ``L`` by preconditioned conjugate gradients.

    Solves the positive-definite system ``(L^dagger L + t t^dagger) x = t``
    with ``t`` the trace functional, starting from the fully pumped state.
    The result is Hermitized block-wise and normalized to unit trace.

    Raises
    ------
    CGNotConverged
        If ``||L x|| / ||x||`` is still above ``tol`` after ``maxiter``
        iterations (default ``10 * dimension``).
    NonUniqueNullSpace
        If the failed solve reveals a second, independent stationary vector.
    """
    layout = L.layout
    maxiter = 10 * L.dimension if maxiter is None else maxiter
    start = fully_pumped_vector(layout) if x0 is None else np.asarray(x0, dtype=complex)
    target = 0.1 * tol
    x, it, rel = _pcg_steady(L, start, target, maxiter)
    x = 0.5 * (x + layout.adjoint(x))
    x /= layout.trace_vector() @ x
    rel = float(np.linalg.norm(L.matvec(x)) / np.linalg.norm(x))
    if rel >= tol:
        # a second start distinguishes slow convergence from a degenerate kernel
        mixed = DickeState.maximally_mixed(layout.N).to_vector(layout)
        y, _, rel_y = _pcg_steady(L, mixed, target, min(maxiter, 2000))
        y /= layout.trace_vector() @ y
        if max(rel, rel_y) < 1e-6 and np.linalg.norm(x - y) > 1e-3 * np.linalg.norm(x):
            raise NonUniqueNullSpace("two independent stationary vectors found")
        raise CGNotConverged(f"CG stopped after {it} iterations at residual {rel:.3e}",
                             residual=rel, iterations=it)
    state = DickeState.from_vector(layout.N, x, layout, iterations=it, residual=rel, method="cg")
    return state


def steady_state_diagonal(p: LMGParams, N: int) -> DickeState:
    """Zero-field steady state from the population rate equations.

    Returns a :class:`DickeState` with diagonal (1-D) blocks.
    """
    if p.field != 0.0:
        raise ValueError("the diagonal solver requires zero field")
    W, index = rate_matrix(p, N)
    W = W.tocsc()
    # columns of W sum to zero, so one balance equation is redundant: pin one
    # population to 1, drop its row and column, renormalize afterwards. This
    # keeps the system sparse (a dense normalization row would not). The pinned
    # state must carry non-negligible weight or the others overflow, so start
    # near the mean-field magnetization and re-pin once at the most probable state.
    G, g = p.collective_rate, p.local_rate
    mz, radius = 1.0, 1.0
    if G > g:
        mz = g / G
        radius = math.sqrt(mz * mz + 2.0 * g * (G - g) / G**2)
    j2 = min(N, max(N % 2, N % 2 + 2 * int(round((N * radius - N % 2) / 2))))
    a = int(round(j2 / 2 + N / 2 * mz))
    ref = index[j2].start + min(max(a, 0), j2)
    pops = _pinned_solve(W, ref)
    best = int(np.argmax(pops))
    if best != ref:
        pops = _pinned_solve(W, best)
    resid = float(np.linalg.norm(W @ pops, ord=1))
    if np.min(pops) < -1e-12 * max(1.0, np.max(pops)) - 1e-12:
        log.warning("diagonal solve produced populations down to %.3e", np.min(pops))
    pops = np.clip(pops, 0.0, None)
    pops /= pops.sum()
    blocks = {j2: pops[sl] for j2, sl in index.items()}
    return DickeState(N, blocks, {"iterations": 0, "residual": resid, "method": "diagonal"})


def _pinned_solve(W, ref: int) -> np.ndarray:
    n = W.shape[0]
    keep = np.delete(np.arange(n), ref)
    A = W[keep][:, keep]
    b = -W[keep, ref].toarray().ravel()
    try:
        with np.errstate(all="raise"):
            sol = spla.spsolve(A.tocsc(), b) if n > 1 else np.zeros(0)
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise SingularRateMatrix(str(exc)) from exc
    pops = np.insert(np.atleast_1d(sol), ref, 1.0)
    if not np.all(np.isfinite(pops)) or pops.sum() <= 0.0:
        raise SingularRateMatrix("rate equations have no unique normalized solution")
    return pops / pops.sum()


def rate_matrix(p: LMGParams, N: int):
    """Generator ``W`` of ``dp/dt = W p`` for the zero-field populations ``p[J, Jz]``.

    Returns ``(W, index)`` with ``index[j2]`` the slice of sector ``2J``.
    """
    G, g = p.collective_rate, p.local_rate
    j2s = sector_j2(N)
    index, off = {}, 0
    for j2 in j2s:
        index[j2] = slice(off, off + j2 + 1)
        off += j2 + 1
    n = off
    rows, cols, vals = [], [], []
    half = N / 2

    def pos(j2, m):
        # m is Jz as float; returns -1 if outside
        if j2 not in index or abs(m) > j2 / 2:
            return -1
        return index[j2].start + int(round(m + j2 / 2))

    for j2 in j2s:
        J = j2 / 2
        for a in range(j2 + 1):
            m = a - J
            tgt = index[j2].start + a
            C1 = G / N * (1 + J - m) * (J + m) + g * (half - m)
            rows.append(tgt); cols.append(tgt); vals.append(-C1)
            src = pos(j2, m + 1)
            if src >= 0:
                rows.append(tgt); cols.append(src); vals.append(G / N * (J - m) * (J + m + 1))
            src = pos(j2 + 2, m - 1)
            if src >= 0:
                C3 = g * (J - m + 1) * (J - m + 2) * (half + J + 2) / (2 * (J + 1) * (2 * J + 3))
                rows.append(tgt); cols.append(src); vals.append(C3)
            src = pos(j2, m - 1)
            if src >= 0 and J > 0:
                C4 = g * (J - m + 1) * (J + m) * (half + 1) / (2 * J * (J + 1))
                rows.append(tgt); cols.append(src); vals.append(C4)
            src = pos(j2 - 2, m - 1)
            if src >= 0 and j2 > 1:
                C5 = g * (J + m - 1) * (J + m) * (half - J + 1) / (2 * J * (2 * J - 1))
                rows.append(tgt); cols.append(src); vals.append(C5)
    W = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return W, index


# --------------------------------------------------------------------------
# mutual information


@dataclass(frozen=True)
class FiniteResult:
    N: int
    params: LMGParams
    mutual_info: float
    total_entropy_per_unit: float
    local_entropy: float
    magnetization: np.ndarray
    iterations: int
    residual: float
    method: str
    state: DickeState = field(repr=False, compare=False)

    @property
    def m_xy(self) -> float:
        return float(math.hypot(self.magnetization[0], self.magnetization[1]))


def analyze_state(state: DickeState, params: LMGParams) -> FiniteResult:
    N = state.N
    S_T = total_entropy(state)
    m = local_magnetization(state)
    S_i = binary_entropy(min(float(np.linalg.norm(m)), 1.0))
    mi = S_i - S_T / N
    if mi < -1e-9:
        log.warning("negative mutual information %.3e at N=%d", mi, N)
    info = state.info
    return FiniteResult(N, params, max(mi, 0.0), S_T / N, S_i, m, int(info.get("iterations", 0)),
                        float(info.get("residual", math.nan)), str(info.get("method", "")), state)


def solve(p: LMGParams, N: int, method: str = "auto", tol: float = 1e-9,
          maxiter: Optional[int] = None, matrix_free: Optional[bool] = None, x0=None) -> DickeState:
    """Steady state at size ``N``; ``method`` is ``auto``, ``diagonal`` or ``cg``.

    ``auto`` routes zero-field problems to the diagonal solver.
    """
    if method == "auto":
        method = "diagonal" if p.field == 0.0 else "cg"
    if method == "diagonal":
        return steady_state_diagonal(p, N)
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")
    L = assemble_liouvillian(p, N, matrix_free=matrix_free)
    return steady_state(L, tol=tol, maxiter=maxiter, x0=x0)


def finite_analysis(p: LMGParams, N: int, **kwargs) -> FiniteResult:
    return analyze_state(solve(p, N, **kwargs), p)


def finite_mutual_info(p: LMGParams, N: int, **kwargs) -> float:
    """Intensive multipartite mutual information ``S(rho_i) - S(rho_T)/N`` at size ``N``."""
    return finite_analysis(p, N, **kwargs).mutual_info
