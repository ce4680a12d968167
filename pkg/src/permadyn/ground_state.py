"""Ground-state mutual information of the ferromagnetic LMG Hamiltonian.

For ``coupling < 0`` the ground state lies in the maximal sector
``J = N/2``, where ``Jx^2 + Jy^2 = J(J+1) - Jz^2`` is diagonal and the field
term ``h Jx`` is tridiagonal. The state is pure, so ``I_M/N = S(rho_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DegenerateGround
from .state_space import binary_entropy


@dataclass(frozen=True)
class GroundStateResult:
    N: int
    coupling: float
    field: float
    energy: float
    gap: float
    magnetization: np.ndarray
    mutual_info_per_unit: float


def _tridiagonal(coupling: float, field: float, N: int):
    J = N / 2
    m = np.arange(N + 1) - J
    diag = coupling * (J * (J + 1) - m * m) / N
    # <m+1| Jx |m> = sqrt(J(J+1) - m(m+1)) / 2
    off = 0.5 * field * np.sqrt(np.maximum(J * (J + 1) - m[:-1] * (m[:-1] + 1), 0.0))
    return m, diag, off


def ground_state_mutual_info(coupling: float, field: float, N: int) -> GroundStateResult:
    """Lowest eigenstate of ``coupling (Jx^2+Jy^2)/N + field Jx`` at ``J = N/2``.

    Parameters
    ----------
    coupling : float
        Must be negative (ferromagnetic).
    field : float
    N : int
        Even, at least 2.

    Raises
    ------
    ValueError
        For non-negative coupling or odd/invalid N.
    DegenerateGround
        If the two lowest levels are closer than ``1e-12 * ||H||``.
    """
    if not coupling < 0.0:
        raise ValueError("ground-state analysis requires ferromagnetic coupling < 0")
    if int(N) != N or N < 2 or N % 2:
        raise ValueError(f"N must be an even integer >= 2, got {N}")
    if not math.isfinite(field):
        raise ValueError("field must be finite")
    N = int(N)
    m, diag, off = _tridiagonal(coupling, field, N)
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 1))
    scale = max(np.max(np.abs(diag)) + 2 * np.max(np.abs(off), initial=0.0), 1e-300)
    gap = float(w[1] - w[0])
    if gap < 1e-12 * scale:
        raise DegenerateGround(f"lowest levels split by {gap:.3e}")
    g = v[:, 0]
    J = N / 2
    jx = float(np.sum(g[1:] * g[:-1] * np.sqrt(np.maximum(J * (J + 1) - m[:-1] * (m[:-1] + 1), 0.0))))
    mag = np.array([2.0 * jx / N, 0.0, 2.0 * float(g @ (m * g)) / N])
    r = min(float(np.linalg.norm(mag)), 1.0)
    return GroundStateResult(N, coupling, field, float(w[0]), gap, mag, binary_entropy(r))
