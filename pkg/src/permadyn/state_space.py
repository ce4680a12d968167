"""Single-unit states: Bloch parameterization, spectra and entropies.

All entropies are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BlochOutOfBody, DomainError, NotPositive

CLAMP_TOL = 1e-12
ERROR_TOL = 1e-10


@dataclass(frozen=True)
class BlochVector:
    """Generalized Bloch vector of a ``d``-level unit (``d**2 - 1`` reals)."""

    d: int
    coords: tuple

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("level count d must be >= 2")
        coords = tuple(float(c) for c in np.ravel(self.coords))
        if len(coords) != self.d**2 - 1:
            raise ValueError(f"expected {self.d**2 - 1} coordinates, got {len(coords)}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_array(cls, xi) -> "BlochVector":
        xi = np.asarray(xi, dtype=float).ravel()
        return cls(level_count(xi.size), tuple(xi))

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)


def level_count(n_coords: int) -> int:
    """Return ``d`` such that ``d**2 - 1 == n_coords``."""
    d = int(round(np.sqrt(n_coords + 1)))
    if d * d - 1 != n_coords or d < 2:
        raise ValueError(f"{n_coords} is not of the form d**2 - 1")
    return d


@lru_cache(maxsize=16)
def su_basis(d: int) -> np.ndarray:
    """Generalized Gell-Mann matrices, shape ``(d**2 - 1, d, d)``.

    Ordered symmetric, antisymmetric, diagonal, so that ``d = 2`` gives
    ``(sigma_x, sigma_y, sigma_z)``. Normalization is ``Tr(v_a v_b) = 2 delta_ab``.
    """
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            mats.append(m)
    # diagonal generators, highest level first so d=2 yields diag(1, -1)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


def _coords(xi) -> np.ndarray:
    if isinstance(xi, BlochVector):
        return xi.as_array()
    return np.asarray(xi, dtype=float).ravel()


def density_from_bloch(xi) -> np.ndarray:
    """Density matrix ``(1 + xi . v) / d`` of a Bloch vector.

    Raises
    ------
    BlochOutOfBody
        If the resulting matrix has an eigenvalue below ``-1e-10``.
    """
    x = _coords(xi)
    d = level_count(x.size)
    rho = (np.eye(d, dtype=complex) + np.tensordot(x, su_basis(d), axes=1)) / d
    if d == 2:
        lowest = 0.5 * (1.0 - np.linalg.norm(x))
    else:
        lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -ERROR_TOL:
        raise BlochOutOfBody(f"Bloch vector outside the state body (min eigenvalue {lowest:.3e})")
    return rho


def bloch_from_density(rho) -> np.ndarray:
    """Inverse of :func:`density_from_bloch`: ``xi_a = (d/2) Tr(rho v_a)``."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    return 0.5 * d * np.real(np.einsum("aij,ji->a", su_basis(d), rho))


def in_bloch_body(xi, tol: float = 0.0) -> bool:
    x = _coords(xi)
    d = level_count(x.size)
    if d == 2:
        return float(np.linalg.norm(x)) <= 1.0 + tol
    rho = (np.eye(d) + np.tensordot(x, su_basis(d), axes=1)) / d
    return np.linalg.eigvalsh(rho)[0] >= -tol


def spectrum(rho) -> np.ndarray:
    """Eigenvalues of a Hermitian density matrix as a probability vector.

    Eigenvalues in ``[-1e-12, 0)`` are clamped to zero, the result is sorted
    in decreasing order and renormalized to unit sum.

    Raises
    ------
    NotPositive
        If any eigenvalue is below ``-1e-10``.
    """
    rho = np.asarray(rho)
    herm = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(herm)
    if w[0] < -ERROR_TOL:
        raise NotPositive(f"matrix has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)[::-1]
    total = w.sum()
    if total <= 0.0:
        raise NotPositive("matrix has zero trace")
    return w / total


def shannon(p) -> float:
    """``-sum p ln p`` with ``0 ln 0 = 0``."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    """``-Tr(rho ln rho)`` in nats."""
    return shannon(spectrum(rho))


def binary_entropy(x: float) -> float:
    """Entropy of a qubit whose Bloch vector has length ``x``.

    Values outside ``[0, 1]`` by at most ``1e-12`` are clamped.
    """
    if x < -CLAMP_TOL or x > 1.0 + CLAMP_TOL or not np.isfinite(x):
        raise DomainError(f"binary_entropy argument {x!r} outside [0, 1]")
    x = min(max(float(x), 0.0), 1.0)
    return shannon([(1.0 + x) / 2.0, (1.0 - x) / 2.0])
