"""Monodromy matrices and Floquet multipliers of mean-field limit cycles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _backend
from .errors import Degenerate, NoCycle
from .meanfield import AttractorReport, DriftSystem, LimitCycle, _raise_for_status, gauss_legendre

DEFAULT_TOL_UNIT = 1e-6


def _cycle(cycle: Union[AttractorReport, LimitCycle]) -> LimitCycle:
    kind = cycle.kind if isinstance(cycle, AttractorReport) else cycle
    if not isinstance(kind, LimitCycle):
        raise NoCycle(f"Floquet analysis needs a limit cycle, got {type(kind).__name__}")
    return kind


def fundamental_matrix(sys: DriftSystem, x0, duration: float, rtol: float = 1e-10,
                       atol: float = 1e-12):
    """Co-integrate the state and ``dM/dt = J(xi_t) M`` with ``M(0) = 1``.

    Returns
    -------
    final_state : ndarray
    M : ndarray, shape (dim, dim)
    """
    n = sys.dim
    x0 = np.asarray(x0, dtype=float)
    y0 = np.concatenate([x0, np.eye(n).ravel()])
    if sys.native is not None and sys.native[0] == "lmg":
        ts, ys, _, status = _backend.dp45_lmg(y0, 0.0, duration, *sys.native[1], rtol=rtol,
                                              atol=atol, variational=True)
    else:
        def aug(y):
            x = y[:n]
            return np.concatenate([sys.field(x), (sys.jacobian(x) @ y[n:].reshape(n, n)).ravel()])

        ts, ys, _, status = _backend.dp45(aug, y0, 0.0, duration, rtol, atol)
    _raise_for_status(status, ts)
    return ys[-1, :n].copy(), ys[-1, n:].reshape(n, n).copy()


def monodromy(sys: DriftSystem, cycle: Union[AttractorReport, LimitCycle], rtol: float = 1e-10,
              atol: float = 1e-12) -> np.ndarray:
    """Fundamental matrix after one period, started at the cycle's section point."""
    c = _cycle(cycle)
    return fundamental_matrix(sys, c.section_point, c.period, rtol, atol)[1]


def trace_integral(sys: DriftSystem, cycle: Union[AttractorReport, LimitCycle], nodes: int = 256) -> float:
    """Gauss-Legendre quadrature of ``tr J(xi_t)`` over one period."""
    c = _cycle(cycle)
    x, w = gauss_legendre(nodes)
    t = 0.5 * c.period * (x + 1.0)
    traces = np.array([np.trace(sys.jacobian(s)) for s in c.orbit(t)])
    return 0.5 * c.period * float(w @ traces)


@dataclass(frozen=True)
class FloquetReport:
    multipliers: np.ndarray
    unit_multiplier_error: float
    is_hyperbolic: bool
    is_attractive: bool
    period: float
    monodromy: np.ndarray
    det_identity_error: float

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.multipliers)


def classify_multipliers(multipliers, tol_unit: float = DEFAULT_TOL_UNIT):
    """Return ``(unit_multiplier_error, is_hyperbolic, is_attractive)``.

    Raises
    ------
    Degenerate
        If more than one multiplier lies within ``tol_unit`` of 1.
    """
    mu = np.asarray(multipliers)
    dist = np.abs(mu - 1.0)
    near = np.nonzero(dist < tol_unit)[0]
    if near.size > 1:
        raise Degenerate(f"{near.size} Floquet multipliers within {tol_unit:g} of 1")
    unit_err = float(dist.min())
    if near.size == 0:
        return unit_err, False, False
    others = np.delete(mu, near[0])
    hyperbolic = bool(np.all(np.abs(np.abs(others) - 1.0) > tol_unit))
    attractive = hyperbolic and bool(np.all(np.abs(others) < 1.0))
    return unit_err, hyperbolic, attractive


def floquet_analysis(sys: DriftSystem, cycle: Union[AttractorReport, LimitCycle],
                     tol_unit: float = DEFAULT_TOL_UNIT, rtol: float = 1e-10,
                     atol: float = 1e-12) -> FloquetReport:
    """Floquet multipliers of a limit cycle and its hyperbolicity.

    The cycle is hyperbolic when exactly one multiplier equals 1 (within
    ``tol_unit``) and all others have modulus away from 1; attractive when
    those others lie inside the unit circle.
    """
    c = _cycle(cycle)
    M = monodromy(sys, c, rtol, atol)
    mu = np.linalg.eigvals(M)
    mu = mu[np.argsort(-np.abs(mu - 0.0))]
    unit_err, hyperbolic, attractive = classify_multipliers(mu, tol_unit)
    expected = math.exp(trace_integral(sys, c))
    det_err = abs(np.linalg.det(M) - expected) / abs(expected)
    return FloquetReport(mu, unit_err, hyperbolic, attractive, c.period, M, float(det_err))
