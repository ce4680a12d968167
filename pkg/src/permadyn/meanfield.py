"""Mean-field (drift) dynamics of the Bloch vector and its long-time averages.

The pipeline is

1. :func:`integrate` the drift from an initial Bloch vector,
2. :func:`classify_attractor` on the tail of the trajectory,
3. :func:`time_average_state` / :func:`macroscopic_mutual_info` over the
   attractor: ``S(avg rho) - avg S(rho)`` per unit.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import brentq

from . import _backend
from .errors import (AverageNotConverged, BlochEscape, BlochOutOfBody, StepSizeUnderflow,
                     TransientNotConverged)
from .state_space import (BlochVector, density_from_bloch, in_bloch_body,
                          level_count, von_neumann_entropy)

log = logging.getLogger(__name__)

BODY_TOL = 1e-6


@dataclass(frozen=True)
class DriftSystem:
    """Vector field ``g(xi)`` on the Bloch body with its analytic Jacobian.

    ``native`` optionally names a model the compiled kernels know how to
    integrate directly, e.g. ``("lmg", (coupling, field, Gamma, gamma))``.
    """

    dim: int
    field: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    native: Optional[tuple] = None
    name: str = "drift"

    @property
    def d(self) -> int:
        return level_count(self.dim)


def zero_drift(dim: int = 3) -> DriftSystem:
    return DriftSystem(dim, lambda x: np.zeros(dim), lambda x: np.zeros((dim, dim)), name="zero")


def linear_drift(A) -> DriftSystem:
    """``g(xi) = A xi``; mostly useful for tests of the variational machinery."""
    A = np.array(A, dtype=float)
    return DriftSystem(A.shape[0], lambda x: A @ x, lambda x: A.copy(), name="linear")


def jacobian_fd_residual(sys: DriftSystem, points, step: float = 1e-6) -> float:
    """Largest componentwise gap between ``sys.jacobian`` and central differences."""
    worst = 0.0
    for x in np.atleast_2d(points):
        fd = np.empty((sys.dim, sys.dim))
        for l in range(sys.dim):
            e = np.zeros(sys.dim)
            e[l] = step
            fd[:, l] = (sys.field(x + e) - sys.field(x - e)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(fd - sys.jacobian(x)))))
    return worst


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator steps with cubic-Hermite dense output."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def __len__(self):
        return len(self.times)

    def __call__(self, t):
        """Dense output at scalar or array ``t`` within ``[t0, t_end]``."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, len(self.times) - 2)
        ta, tb = self.times[idx], self.times[idx + 1]
        h = (tb - ta)[:, None]
        s = ((t_arr - ta) / (tb - ta))[:, None]
        ya, yb = self.states[idx], self.states[idx + 1]
        fa, fb = self.derivs[idx], self.derivs[idx + 1]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out = h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb
        return out[0] if np.ndim(t) == 0 else out

    def integral(self) -> np.ndarray:
        """Exact integral of the Hermite interpolant over the whole span."""
        h = np.diff(self.times)[:, None]
        y, f = self.states, self.derivs
        return np.sum(h / 2 * (y[:-1] + y[1:]) + h**2 / 12 * (f[:-1] - f[1:]), axis=0)

    def tail(self, t_start: float) -> "Trajectory":
        """Steps from the one containing ``t_start`` onward."""
        i = max(int(np.searchsorted(self.times, t_start, side="right")) - 1, 0)
        return Trajectory(self.times[i:], self.states[i:], self.derivs[i:])


def _as_coords(xi) -> np.ndarray:
    if isinstance(xi, BlochVector):
        return xi.as_array()
    return np.asarray(xi, dtype=float).ravel()


def integrate(sys: DriftSystem, xi0, t_end: float, rtol: float = 1e-8, atol: float = 1e-10,
              t0: float = 0.0, max_steps: int = 50_000_000) -> Trajectory:
    """Integrate ``d xi/dt = g(xi)`` from ``t0`` to ``t_end`` (Dormand-Prince 4(5)).

    Raises
    ------
    StepSizeUnderflow
        If the adaptive step drops below ``1e-14 * t_end``.
    BlochEscape
        If a state leaves the Bloch body by more than ``1e-6``.
    """
    x0 = _as_coords(xi0)
    if x0.size != sys.dim:
        raise ValueError(f"initial state has {x0.size} components, drift has {sys.dim}")
    if not in_bloch_body(x0, 1e-10):
        raise BlochOutOfBody("initial state outside the Bloch body")
    if not t_end > t0:
        raise ValueError("t_end must exceed the start time")
    if sys.native is not None and sys.native[0] == "lmg":
        ts, ys, fs, status = _backend.dp45_lmg(x0, t0, t_end, *sys.native[1], rtol=rtol,
                                               atol=atol, max_steps=max_steps, body_tol=BODY_TOL)
    else:
        body_dim = 3 if sys.dim == 3 else 0
        ts, ys, fs, status = _backend.dp45(sys.field, x0, t0, t_end, rtol, atol,
                                           max_steps=max_steps, body_dim=body_dim,
                                           body_tol=BODY_TOL)
    _raise_for_status(status, ts)
    if sys.dim != 3:
        _check_body(ys)
    return Trajectory(ts, ys, fs)


def _raise_for_status(status: int, ts) -> None:
    if status == _backend.UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={ts[-1]:.6g}")
    if status == _backend.ESCAPE:
        raise BlochEscape(f"trajectory left the Bloch body at t={ts[-1]:.6g}")
    if status == _backend.MAX_STEPS:
        raise StepSizeUnderflow(f"step budget exhausted at t={ts[-1]:.6g}")


def _check_body(states) -> None:
    d = level_count(states.shape[1])
    from .state_space import su_basis
    rhos = (np.eye(d) + np.tensordot(states, su_basis(d), axes=1)) / d
    lowest = np.linalg.eigvalsh(rhos)[:, 0]
    bad = np.nonzero(lowest < -BODY_TOL / d)[0]
    if bad.size:
        raise BlochEscape(f"trajectory left the Bloch body at step {bad[0]}")


# --------------------------------------------------------------------------
# attractors


@dataclass(frozen=True)
class FixedPoint:
    point: np.ndarray


@dataclass(frozen=True)
class LimitCycle:
    """Periodic orbit; ``orbit`` spans exactly one period from the section point."""

    period: float
    orbit: Trajectory
    closure_error: float

    @property
    def section_point(self) -> np.ndarray:
        return self.orbit.states[0].copy()


@dataclass(frozen=True)
class Unclassified:
    mean: np.ndarray
    spread: float
    end_state: np.ndarray
    end_time: float
    window: float


@dataclass(frozen=True)
class AttractorReport:
    kind: Union[FixedPoint, LimitCycle, Unclassified]
    transient_time: float
    system: Optional[DriftSystem] = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return {FixedPoint: "fixed_point", LimitCycle: "limit_cycle",
                Unclassified: "unclassified"}[type(self.kind)]

    @property
    def period(self) -> float:
        return self.kind.period if isinstance(self.kind, LimitCycle) else math.nan


def _spectral_abscissa(sys: DriftSystem, x) -> float:
    return float(np.max(np.linalg.eigvals(sys.jacobian(x)).real))


def _newton_root(sys: DriftSystem, x, tol: float = 1e-13, maxiter: int = 50):
    x = np.array(x, dtype=float)
    for _ in range(maxiter):
        g = sys.field(x)
        if np.linalg.norm(g) < tol:
            return x
        try:
            dx = np.linalg.solve(sys.jacobian(x), -g)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if not np.all(np.isfinite(x)):
            return None
    return x if np.linalg.norm(sys.field(x)) < tol else None


def _section_crossings(traj: Trajectory, anchor, normal):
    """Times in ``traj`` where the orbit crosses the plane through ``anchor``
    (normal ``normal``) in the direction of ``normal``."""
    s = (traj.states - anchor) @ normal
    idx = np.nonzero((s[:-1] < 0.0) & (s[1:] >= 0.0))[0]
    out = []
    for i in idx:
        ta, tb = traj.times[i], traj.times[i + 1]
        if s[i + 1] == 0.0:
            out.append(float(tb))
            continue

        def fn(t):
            return float((traj(t) - anchor) @ normal)

        fa, fb = fn(ta), fn(tb)
        if fa == 0.0:
            out.append(float(ta))
        elif fa * fb < 0.0:
            out.append(brentq(fn, ta, tb, xtol=1e-14, rtol=4 * np.finfo(float).eps))
        else:
            out.append(float(tb))
    return np.array(out)


def classify_attractor(sys: DriftSystem, traj: Trajectory, *, fp_tol: float = 1e-9,
                       disp_tol: float = 1e-8, return_tol: float = 1e-7,
                       period_rtol: float = 1e-6, min_returns: int = 3,
                       tail_fraction: float = 0.25, cycle_rtol: float = 1e-10,
                       cycle_atol: float = 1e-12,
                       min_unclassified_returns: int = 20) -> AttractorReport:
    """Classify the long-time behaviour visible in the tail of ``traj``.

    The tail is the last ``tail_fraction`` of ``[0, t_end]``.

    Returns a fixed point if the drift vanishes at the end state and the tail
    is stationary (or the tail approaches monotonically a non-repelling root of
    the drift found by Newton iteration), a limit cycle if at least
    ``min_returns`` consecutive returns to a Poincare section through the end
    state agree within ``return_tol`` with consistent periods, and an
    unclassified attractor if at least ``min_unclassified_returns`` returns
    neither settle nor contract.

    Raises
    ------
    TransientNotConverged
        If the tail is still visibly approaching its attractor.
    """
    t_end = traj.t_end
    tail = traj.tail(t_end - tail_fraction * (t_end - min(traj.t0, 0.0)))
    x_end = traj.final
    g_end = sys.field(x_end)
    displacement = float(np.max(np.linalg.norm(tail.states - x_end, axis=1)))
    transient = float(tail.t0)

    if np.linalg.norm(g_end) < fp_tol and displacement < disp_tol:
        return AttractorReport(FixedPoint(x_end), transient, sys)

    root = _newton_root(sys, x_end)
    if root is not None and in_bloch_body(root, 1e-9):
        samples = tail(np.linspace(tail.t0, t_end, 129))
        dist = np.linalg.norm(samples - root, axis=1)
        abscissa = _spectral_abscissa(sys, root)
        contracting = dist[-1] < np.max(dist[64:]) * (1 + 1e-12) and np.max(dist[64:]) < np.max(dist[:64])
        if abscissa <= 1e-12 and contracting:
            if (abscissa < 0.0 and dist[-1] < 1e-4) or dist[-1] < 5e-2:
                return AttractorReport(FixedPoint(root), transient, sys)
            raise TransientNotConverged(
                f"approaching a stable fixed point, distance {dist[-1]:.2e}")

    speed = float(np.linalg.norm(g_end))
    if speed == 0.0:
        raise TransientNotConverged("trajectory stalled away from a classified attractor")
    normal = g_end / speed
    crossings = _section_crossings(tail, x_end, normal)
    extent = float(np.max(np.ptp(tail.states, axis=0)))
    if crossings.size:
        pts = tail(crossings)
        near = np.linalg.norm(pts - x_end, axis=1) < 0.1 * max(extent, 1e-12)
        crossings = crossings[near]
    # the end point lies on the section by construction
    if crossings.size and t_end - crossings[-1] < 1e-9 * max(1.0, t_end):
        crossings = crossings[:-1]
    crossings = np.append(crossings, t_end)
    if crossings.size < min_returns + 1:
        raise TransientNotConverged(
            f"only {crossings.size - 1} section returns in the tail window; extend t_end")
    points = tail(crossings[:-1])
    points = np.vstack([points, x_end])
    periods = np.diff(crossings)
    gaps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    last_gaps = gaps[-min_returns:]
    last_periods = periods[-min_returns:]
    period = float(last_periods[-1])
    consistent = np.max(np.abs(last_periods - period)) <= period_rtol * period
    if np.all(last_gaps < return_tol) and consistent:
        orbit = integrate(sys, x_end, t_end + period, rtol=cycle_rtol, atol=cycle_atol, t0=t_end)
        orbit = Trajectory(orbit.times - t_end, orbit.states, orbit.derivs)
        closure = float(np.linalg.norm(orbit.final - x_end))
        if closure >= return_tol:
            raise TransientNotConverged(f"one-period closure error {closure:.2e} above {return_tol}")
        return AttractorReport(LimitCycle(period, orbit, closure), transient, sys)
    # geometric shrinking of the return gaps means a slowly attracting cycle
    shrinking = float(np.mean(np.diff(gaps) < 0.0)) > 0.9
    if gaps.size < min_unclassified_returns or gaps[-1] < 0.5 * gaps[0] or shrinking:
        raise TransientNotConverged(f"section returns not settled (gap {gaps[-1]:.2e})")
    mean = tail.integral() / (tail.t_end - tail.t0)
    return AttractorReport(Unclassified(mean, extent, x_end, t_end, t_end - tail.t0), transient, sys)


@dataclass
class MeanFieldSettings:
    """Numerical settings of the attractor search and averaging.

    ``transient`` overrides the minimum integration time before the first
    classification attempt.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    transient: Optional[float] = None
    base_transient: float = 50.0
    max_time: float = 2.0e5
    quad_nodes: int = 64
    quad_tol: float = 1e-10
    max_quad_nodes: int = 1 << 14
    average_tol: float = 1e-7
    max_windows: int = 14


def find_attractor(sys: DriftSystem, xi0, settings: Optional[MeanFieldSettings] = None) -> AttractorReport:
    """Integrate past the transient and classify, doubling the horizon as needed."""
    s = settings or MeanFieldSettings()
    x0 = _as_coords(xi0)
    t_total = s.base_transient
    traj = integrate(sys, x0, t_total, s.rtol, s.atol)
    # slow approach to a nearby stable root: wait ~50 e-folds of its slowest mode
    root = _newton_root(sys, traj.final)
    if root is not None and np.linalg.norm(root - traj.final) < 0.1:
        abscissa = _spectral_abscissa(sys, root)
        if abscissa < 0.0:
            t_total = max(t_total, 50.0 / -abscissa)
    if s.transient is not None:
        t_total = max(t_total, float(s.transient))
    t_total = min(t_total, s.max_time)
    if t_total > traj.t_end:
        traj = integrate(sys, traj.final, t_total, s.rtol, s.atol, t0=traj.t_end)
    while True:
        try:
            return classify_attractor(sys, traj)
        except TransientNotConverged:
            if 2 * t_total > s.max_time:
                raise
        # keep only the segment that will contain the next tail window
        t_total *= 2
        traj = integrate(sys, traj.final, t_total, s.rtol, s.atol, t0=traj.t_end)
        log.debug("extending mean-field horizon to t=%g", t_total)


# --------------------------------------------------------------------------
# averages


@lru_cache(maxsize=32)
def gauss_legendre(nodes: int):
    """Cached Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _entropies(states: np.ndarray) -> np.ndarray:
    if states.shape[1] == 3:
        r = np.minimum(np.linalg.norm(states, axis=1), 1.0)
        p = np.stack([(1.0 + r) / 2.0, (1.0 - r) / 2.0])
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0.0, -p * np.log(p), 0.0)
        return terms.sum(axis=0)
    return np.array([von_neumann_entropy(density_from_bloch(x)) for x in states])


def _gauss_cycle_average(orbit: Trajectory, period: float, fn, nodes: int):
    x, w = gauss_legendre(nodes)
    t = 0.5 * period * (x + 1.0)
    vals = fn(orbit(t))
    return 0.5 * np.tensordot(w, vals, axes=1)


@dataclass(frozen=True)
class AttractorAverages:
    """Time averages over an attractor (per-unit, nats)."""

    mean_bloch: np.ndarray
    mean_entropy: float
    entropy_of_mean: float
    nodes: int
    achieved_tol: float

    @property
    def mutual_info(self) -> float:
        return max(self.entropy_of_mean - self.mean_entropy, 0.0)

    @property
    def mean_state(self) -> np.ndarray:
        return density_from_bloch(self.mean_bloch)


def attractor_averages(report: AttractorReport, settings: Optional[MeanFieldSettings] = None) -> AttractorAverages:
    """Averages of the Bloch vector and of the unit entropy over the attractor."""
    s = settings or MeanFieldSettings()
    kind = report.kind
    if isinstance(kind, FixedPoint):
        S = von_neumann_entropy(density_from_bloch(kind.point))
        return AttractorAverages(np.array(kind.point, dtype=float), S, S, 1, 0.0)
    if isinstance(kind, LimitCycle):
        nodes = max(64, s.quad_nodes)
        prev = _gauss_cycle_average(kind.orbit, kind.period, _entropies, nodes)
        change = math.inf
        while nodes < s.max_quad_nodes:
            nodes *= 2
            cur = _gauss_cycle_average(kind.orbit, kind.period, _entropies, nodes)
            change = abs(cur - prev)
            prev = cur
            if change < s.quad_tol:
                break
        mean = _gauss_cycle_average(kind.orbit, kind.period, lambda y: y, nodes)
        S_mean = von_neumann_entropy(density_from_bloch(_clip_ball(mean)))
        return AttractorAverages(mean, float(prev), S_mean, nodes, change)
    return _window_averages(report, s)


def _clip_ball(x):
    x = np.asarray(x, dtype=float)
    if x.size == 3:
        r = np.linalg.norm(x)
        if r > 1.0:
            x = x / r
    return x


def _segment_entropy_integral(traj: Trajectory) -> float:
    """Integral of the unit entropy along ``traj`` (3-point Gauss per step)."""
    gx, gw = gauss_legendre(3)
    ta, tb = traj.times[:-1], traj.times[1:]
    h = tb - ta
    t = (ta[:, None] + 0.5 * h[:, None] * (gx[None, :] + 1.0)).ravel()
    vals = _entropies(traj(t)).reshape(-1, 3)
    return float(np.sum(0.5 * h * (vals @ gw)))


WINDOW_CHUNK = 5000.0


def _window_averages(report: AttractorReport, s: MeanFieldSettings) -> AttractorAverages:
    sys = report.system
    if sys is None:
        raise ValueError("unclassified attractor reports need their drift system for averaging")
    kind = report.kind
    window = max(kind.window, 1.0)
    x, t = kind.end_state, kind.end_time
    prev = None
    for _ in range(s.max_windows):
        total, S_total, t_stop = 0.0, 0.0, t + window
        # bounded chunks keep memory flat for long windows
        while t < t_stop:
            seg = integrate(sys, x, min(t + WINDOW_CHUNK, t_stop), s.rtol, s.atol, t0=t)
            total = total + seg.integral()
            S_total += _segment_entropy_integral(seg)
            x, t = seg.final, seg.t_end
        mean = total / window
        S_avg = S_total / window
        if prev is not None:
            diff = max(float(np.max(np.abs(mean - prev[0]))), abs(S_avg - prev[1]))
            if diff <= s.average_tol:
                S_mean = von_neumann_entropy(density_from_bloch(_clip_ball(mean)))
                return AttractorAverages(mean, S_avg, S_mean, 0, diff)
        prev = (mean, S_avg)
        window *= 2
    raise AverageNotConverged("successive window averages did not agree within "
                              f"{s.average_tol:g}")


def time_average_state(report: AttractorReport, settings: Optional[MeanFieldSettings] = None) -> np.ndarray:
    """Time-averaged unit density matrix over the attractor."""
    return attractor_averages(report, settings).mean_state


@dataclass(frozen=True)
class MeanFieldResult:
    report: AttractorReport
    averages: AttractorAverages

    @property
    def mutual_info(self) -> float:
        if isinstance(self.report.kind, FixedPoint):
            return 0.0
        return self.averages.mutual_info


def mean_field_analysis(sys: DriftSystem, xi0, settings: Optional[MeanFieldSettings] = None) -> MeanFieldResult:
    s = settings or MeanFieldSettings()
    report = find_attractor(sys, xi0, s)
    return MeanFieldResult(report, attractor_averages(report, s))


def macroscopic_mutual_info(sys: DriftSystem, xi0, settings: Optional[MeanFieldSettings] = None) -> float:
    """Intensive multipartite mutual information in the large-N limit (nats per unit).

    Equals ``S(avg rho_xi) - avg S(rho_xi)`` with averages over the attractor
    reached from ``xi0``; exactly zero on fixed points.
    """
    return mean_field_analysis(sys, xi0, settings).mutual_info
