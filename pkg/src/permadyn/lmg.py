"""Driven-dissipative Lipkin-Meshkov-Glick model.

``N`` spin-1/2 units with isotropic XY exchange ``coupling``, transverse
field ``field`` along x, collective decay at rate ``collective_rate / N``
and local pumping (sigma_+) at rate ``local_rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._pykernels import lmg_jac, lmg_rhs
from .errors import NoCycle
from .meanfield import DriftSystem
from .state_space import binary_entropy

DEFAULT_INITIAL = (0.3, 0.0, 0.8)


@dataclass(frozen=True)
class LMGParams:
    coupling: float
    field: float = 0.0
    collective_rate: float = 0.0
    local_rate: float = 1.0

    def __post_init__(self):
        if not self.local_rate > 0.0:
            raise ValueError("local_rate must be positive")
        if self.collective_rate < 0.0:
            raise ValueError("collective_rate must be non-negative")
        for name in ("coupling", "field", "collective_rate", "local_rate"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_tuple(self):
        return (self.coupling, self.field, self.collective_rate, self.local_rate)


@dataclass(frozen=True)
class LimitCycleParams:
    m_xy: float
    m_z: float
    omega: float

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega if self.omega else math.inf


def lmg_drift(m, p: LMGParams) -> np.ndarray:
    """Mean-field time derivative of the magnetization ``(m_x, m_y, m_z)``."""
    return lmg_rhs(*p.as_tuple())(np.asarray(m, dtype=float))


def lmg_jacobian(m, p: LMGParams) -> np.ndarray:
    """Analytic Jacobian of :func:`lmg_drift`; ``[k, l] = d g_k / d m_l``."""
    return lmg_jac(*p.as_tuple())(np.asarray(m, dtype=float))


def drift_system(p: LMGParams) -> DriftSystem:
    return DriftSystem(3, lmg_rhs(*p.as_tuple()), lmg_jac(*p.as_tuple()),
                       native=("lmg", p.as_tuple()), name="lmg")


def analytic_limit_cycle(p: LMGParams) -> LimitCycleParams:
    """Closed-form precessing orbit at zero field.

    ``m = (m_xy sin wt, m_xy cos wt, gamma/Gamma)`` with
    ``m_xy = sqrt(2 gamma (Gamma - gamma)) / Gamma`` and ``w = J gamma / Gamma``.

    Raises
    ------
    NoCycle
        If ``Gamma <= gamma`` (the north pole is the stable fixed point).
    ValueError
        If the field is non-zero.
    """
    if p.field != 0.0:
        raise ValueError("analytic limit cycle exists only for zero field")
    G, g = p.collective_rate, p.local_rate
    if G <= g:
        raise NoCycle(f"no limit cycle for collective_rate={G} <= local_rate={g}")
    return LimitCycleParams(math.sqrt(2 * g * (G - g)) / G, g / G, p.coupling * g / G)


def analytic_cycle_point(p: LMGParams, phase: float) -> np.ndarray:
    c = analytic_limit_cycle(p)
    return np.array([c.m_xy * math.sin(phase), c.m_xy * math.cos(phase), c.m_z])


def analytic_mutual_info(p: LMGParams) -> float:
    """Large-N intensive mutual information at zero field (nats per unit)."""
    if p.field != 0.0:
        raise ValueError("closed form requires zero field")
    if p.collective_rate <= p.local_rate:
        return 0.0
    c = analytic_limit_cycle(p)
    radius = min(math.hypot(c.m_z, c.m_xy), 1.0)
    return max(binary_entropy(c.m_z) - binary_entropy(radius), 0.0)
