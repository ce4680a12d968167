"""Pure-Python reference kernels.

These are the fallback implementations used when the compiled extension
``permadyn._ckernels`` is unavailable. Both modules expose the same functions
with the same signatures and step-control logic; the test-suite checks that
they agree.
"""
import math

import numpy as np

# integrator status codes
OK = 0
UNDERFLOW = 1
ESCAPE = 2
MAX_STEPS = 3

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / v.size)


def initial_step(fun, t0, y0, f0, direction_span, rtol, atol):
    """Starting step heuristic (Hairer, Norsett & Wanner, sec. II.4)."""
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = fun(y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def dp45(fun, y0, t0, t1, rtol=1e-8, atol=1e-10, first_step=0.0,
         max_steps=10_000_000, body_dim=0, body_tol=1e-6):
    """Adaptive Dormand-Prince integration of an autonomous system ``y' = fun(y)``.

    Parameters
    ----------
    fun : callable
        Right-hand side, maps a 1-D array to a 1-D array of the same size.
    y0 : array_like
        Initial state at ``t0``.
    t0, t1 : float
        Integration interval, ``t1 > t0``.
    rtol, atol : float
        Local error tolerances.
    first_step : float
        Initial step; ``0`` selects it automatically.
    max_steps : int
        Hard limit on accepted plus rejected steps.
    body_dim : int
        If positive, the Euclidean norm of ``y[:body_dim]`` must stay below
        ``1 + body_tol`` (qubit Bloch ball); otherwise integration stops.

    Returns
    -------
    ts, ys, fs : ndarray
        Accepted step times, states and derivatives (Hermite dense-output data).
    status : int
        ``OK``, ``UNDERFLOW``, ``ESCAPE`` or ``MAX_STEPS``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t1) - t
    f = np.asarray(fun(y), dtype=float)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    if span <= 0.0:
        return np.array(ts), np.array(ys), np.array(fs), OK
    h = first_step if first_step > 0.0 else initial_step(fun, t, y, f, span, rtol, atol)
    hmin = 1e-14 * abs(float(t1))
    status = OK
    nsteps = 0
    while t < t1:
        if nsteps >= max_steps:
            status = MAX_STEPS
            break
        nsteps += 1
        if h < hmin:
            status = UNDERFLOW
            break
        last = t + h >= t1
        if last:
            h = t1 - t
        k1 = f
        k2 = fun(y + h * (A21 * k1))
        k3 = fun(y + h * (A31 * k1 + A32 * k2))
        k4 = fun(y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = fun(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = fun(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = fun(y_new)
        err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        if err_norm <= 1.0:
            t = t1 if last else t + h
            y = y_new
            f = k7
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            if body_dim > 0 and math.sqrt(float(np.dot(y[:body_dim], y[:body_dim]))) > 1.0 + body_tol:
                status = ESCAPE
                break
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
            h *= factor
        else:
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
    return np.array(ts), np.array(ys), np.array(fs), status


def lmg_rhs(coupling, field, collective_rate, local_rate):
    """Closure evaluating the LMG mean-field drift."""
    J, h, G, g = coupling, field, collective_rate, local_rate

    def rhs(m):
        mx, my, mz = m
        return np.array([
            J * my * mz + 0.5 * G * mx * mz - 0.5 * g * mx,
            -J * mx * mz - h * mz + 0.5 * G * my * mz - 0.5 * g * my,
            h * my - 0.5 * G * (mx * mx + my * my) + g * (1.0 - mz),
        ])

    return rhs


def lmg_jac(coupling, field, collective_rate, local_rate):
    J, h, G, g = coupling, field, collective_rate, local_rate

    def jac(m):
        mx, my, mz = m
        return np.array([
            [0.5 * G * mz - 0.5 * g, J * mz, J * my + 0.5 * G * mx],
            [-J * mz, 0.5 * G * mz - 0.5 * g, -J * mx - h + 0.5 * G * my],
            [-G * mx, h - G * my, -g],
        ])

    return jac


def lmg_variational_rhs(coupling, field, collective_rate, local_rate):
    """State plus row-major 3x3 fundamental matrix, 12 components."""
    rhs = lmg_rhs(coupling, field, collective_rate, local_rate)
    jac = lmg_jac(coupling, field, collective_rate, local_rate)

    def aug(y):
        m = y[:3]
        return np.concatenate([rhs(m), (jac(m) @ y[3:].reshape(3, 3)).ravel()])

    return aug


def dp45_lmg(y0, t0, t1, coupling, field, collective_rate, local_rate,
             rtol=1e-8, atol=1e-10, first_step=0.0, max_steps=10_000_000,
             variational=False, body_tol=1e-6):
    """:func:`dp45` specialised to the LMG drift (optionally with variational equations)."""
    if variational:
        fun = lmg_variational_rhs(coupling, field, collective_rate, local_rate)
    else:
        fun = lmg_rhs(coupling, field, collective_rate, local_rate)
    return dp45(fun, y0, t0, t1, rtol, atol, first_step, max_steps, 3, body_tol)


def dicke_liouvillian_coo(N, coupling, field, collective_rate, local_rate):
    """COO triplets of the Dicke-basis LMG Liouvillian.

    Layout: sectors ``J = J_min .. N/2`` in increasing order, each block
    stored row-major with row index ``Jz`` and column index ``Jz'`` running
    from ``-J`` to ``J``.

    Returns
    -------
    rows, cols : ndarray of int64
    vals : ndarray of complex128
    """
    rows, cols, vals = [], [], []
    offsets = {}
    off = 0
    for j2 in range(N % 2, N + 1, 2):
        offsets[j2] = off
        off += (j2 + 1) ** 2
    Ncol = float(N)

    for j2, start in offsets.items():
        n = j2 + 1
        J = j2 / 2
        m = np.arange(n) - J
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        a = a.ravel()
        b = b.ravel()
        ma, mb = m[a], m[b]
        target = start + a * n + b

        hdiag = coupling * (J * (J + 1) - m * m) / Ncol
        jpjm = J * (J + 1) - m * m + m
        diag = (-1j * (hdiag[a] - hdiag[b])
                - 0.5 * collective_rate / Ncol * (jpjm[a] + jpjm[b])
                - 0.5 * local_rate * (Ncol - ma - mb))
        rows.append(target)
        cols.append(target)
        vals.append(diag.astype(complex))

        # ladder amplitude <m+1|J+|m> for m = m[0..n-2]
        lad = np.sqrt(np.maximum(J * (J + 1) - m[:-1] * (m[:-1] + 1), 0.0))
        if field != 0.0 and n > 1:
            jx = 0.5 * lad
            # -i h Jx rho : target (a, b) <- (a -+ 1, b)
            for shift in (1, -1):
                sel = (a + shift >= 0) & (a + shift < n)
                aa, bb = a[sel], b[sel]
                amp = jx[np.minimum(aa, aa + shift)]
                rows.append(start + aa * n + bb)
                cols.append(start + (aa + shift) * n + bb)
                vals.append(-1j * field * amp)
            # +i h rho Jx : target (a, b) <- (a, b -+ 1)
            for shift in (1, -1):
                sel = (b + shift >= 0) & (b + shift < n)
                aa, bb = a[sel], b[sel]
                amp = jx[np.minimum(bb, bb + shift)]
                rows.append(start + aa * n + bb)
                cols.append(start + aa * n + bb + shift)
                vals.append(1j * field * amp)
        if collective_rate != 0.0 and n > 1:
            # J- rho J+ : target (a, b) <- (a + 1, b + 1)
            sel = (a + 1 < n) & (b + 1 < n)
            aa, bb = a[sel], b[sel]
            rows.append(start + aa * n + bb)
            cols.append(start + (aa + 1) * n + bb + 1)
            vals.append((collective_rate / Ncol * lad[aa] * lad[bb]).astype(complex))

        # local pumping: target (J, mz, mz') <- source (J + k, mz - 1, mz' - 1)
        for k in (-1, 0, 1):
            s2 = j2 + 2 * k
            if s2 not in offsets:
                continue
            Js = s2 / 2
            ns = s2 + 1
            xa, xb = ma - 1.0, mb - 1.0
            sel = (np.abs(xa) <= Js) & (np.abs(xb) <= Js)
            if not np.any(sel):
                continue
            xa, xb, tgt = xa[sel], xb[sel], target[sel]
            if k == 1:
                ca = np.sqrt(np.maximum((Js - xa) * (Js - xa - 1), 0.0))
                cb = np.sqrt(np.maximum((Js - xb) * (Js - xb - 1), 0.0))
                pref = (Ncol / 2 + Js + 1) / (Js * (2 * Js + 1))
            elif k == 0:
                if Js == 0:
                    continue
                ca = np.sqrt(np.maximum((Js - xa) * (Js + xa + 1), 0.0))
                cb = np.sqrt(np.maximum((Js - xb) * (Js + xb + 1), 0.0))
                pref = (Ncol / 2 + 1) / (Js * (Js + 1))
            else:
                ca = -np.sqrt(np.maximum((Js + xa + 1) * (Js + xa + 2), 0.0))
                cb = -np.sqrt(np.maximum((Js + xb + 1) * (Js + xb + 2), 0.0))
                pref = (Ncol / 2 - Js) / ((Js + 1) * (2 * Js + 1))
            coef = 0.5 * local_rate * ca * cb * pref
            keep = coef != 0.0
            src = offsets[s2] + np.rint(xa + Js).astype(np.int64) * ns + np.rint(xb + Js).astype(np.int64)
            rows.append(tgt[keep])
            cols.append(src[keep])
            vals.append(coef[keep].astype(complex))

    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals).astype(complex))
