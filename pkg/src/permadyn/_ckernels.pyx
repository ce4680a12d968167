# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: LMG Dormand-Prince stepping and Liouvillian assembly.

Mirrors ``permadyn._pykernels`` function for function.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

DEF NMAX = 12

cdef int OK = 0
cdef int UNDERFLOW = 1
cdef int ESCAPE = 2
cdef int MAX_STEPS = 3

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0


cdef struct LMG:
    double J
    double h
    double G
    double g
    int variational


cdef inline void lmg_rhs(LMG* p, double* y, double* out) nogil:
    cdef double mx = y[0], my = y[1], mz = y[2]
    cdef double jac[9]
    cdef int r, c, k
    cdef double s
    out[0] = p.J * my * mz + 0.5 * p.G * mx * mz - 0.5 * p.g * mx
    out[1] = -p.J * mx * mz - p.h * mz + 0.5 * p.G * my * mz - 0.5 * p.g * my
    out[2] = p.h * my - 0.5 * p.G * (mx * mx + my * my) + p.g * (1.0 - mz)
    if p.variational:
        jac[0] = 0.5 * p.G * mz - 0.5 * p.g
        jac[1] = p.J * mz
        jac[2] = p.J * my + 0.5 * p.G * mx
        jac[3] = -p.J * mz
        jac[4] = 0.5 * p.G * mz - 0.5 * p.g
        jac[5] = -p.J * mx - p.h + 0.5 * p.G * my
        jac[6] = -p.G * mx
        jac[7] = p.h - p.G * my
        jac[8] = -p.g
        for r in range(3):
            for c in range(3):
                s = 0.0
                for k in range(3):
                    s = s + jac[3 * r + k] * y[3 + 3 * k + c]
                out[3 + 3 * r + c] = s


cdef inline double rms_scaled(double* v, double* y0, double* y1, int n,
                              double rtol, double atol) nogil:
    cdef double s = 0.0, sc, a, b, q
    cdef int i
    for i in range(n):
        a = fabs(y0[i])
        b = fabs(y1[i])
        sc = atol + rtol * (a if a > b else b)
        q = v[i] / sc
        s += q * q
    return sqrt(s / n)


cdef double initial_step(LMG* p, double* y0, double* f0, int n, double span,
                         double rtol, double atol) nogil:
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, sc, h0, h1, q
    cdef double y1[NMAX]
    cdef double f1[NMAX]
    cdef int i
    for i in range(n):
        sc = atol + rtol * fabs(y0[i])
        q = y0[i] / sc
        d0 += q * q
        q = f0[i] / sc
        d1 += q * q
    d0 = sqrt(d0 / n)
    d1 = sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > span:
        h0 = span
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    lmg_rhs(p, y1, f1)
    for i in range(n):
        sc = atol + rtol * fabs(y0[i])
        q = (f1[i] - f0[i]) / sc
        d2 += q * q
    d2 = sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = h0 * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
    h0 = 100 * h0
    if h1 < h0:
        h0 = h1
    if span < h0:
        h0 = span
    return h0


cdef class _Buffer:
    """Growable row store for accepted steps (time, state, derivative)."""
    cdef double* data
    cdef Py_ssize_t rows, cap, width

    def __cinit__(self, Py_ssize_t width, Py_ssize_t cap=1024):
        self.width = width
        self.cap = cap
        self.rows = 0
        self.data = <double*> malloc(cap * width * sizeof(double))
        if self.data == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.data)

    cdef int push(self, double t, double* y, double* f, int n) except -1:
        cdef double* grown
        cdef Py_ssize_t base
        cdef int i
        if self.rows == self.cap:
            grown = <double*> realloc(self.data, 2 * self.cap * self.width * sizeof(double))
            if grown == NULL:
                raise MemoryError()
            self.data = grown
            self.cap *= 2
        base = self.rows * self.width
        self.data[base] = t
        for i in range(n):
            self.data[base + 1 + i] = y[i]
            self.data[base + 1 + n + i] = f[i]
        self.rows += 1
        return 0

    cdef object to_array(self):
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((self.rows, self.width))
        cdef Py_ssize_t i
        cdef double* dst = <double*> out.data
        for i in range(self.rows * self.width):
            dst[i] = self.data[i]
        return out


def dp45_lmg(y0, double t0, double t1, double coupling, double field,
             double collective_rate, double local_rate, double rtol=1e-8,
             double atol=1e-10, double first_step=0.0, long max_steps=10_000_000,
             bint variational=False, double body_tol=1e-6):
    """Adaptive Dormand-Prince integration of the LMG drift.

    Same contract as ``permadyn._pykernels.dp45_lmg``.
    """
    cdef LMG p
    p.J = coupling
    p.h = field
    p.G = collective_rate
    p.g = local_rate
    p.variational = 1 if variational else 0
    cdef int n = 12 if variational else 3
    cdef double[::1] yin = np.ascontiguousarray(y0, dtype=np.float64)
    if yin.shape[0] != n:
        raise ValueError(f"expected initial state of length {n}")

    cdef double y[NMAX]
    cdef double ynew[NMAX]
    cdef double f[NMAX]
    cdef double k2[NMAX]
    cdef double k3[NMAX]
    cdef double k4[NMAX]
    cdef double k5[NMAX]
    cdef double k6[NMAX]
    cdef double k7[NMAX]
    cdef double tmp[NMAX]
    cdef double err[NMAX]
    cdef int i, status = OK
    cdef long nsteps = 0
    cdef double t = t0, span = t1 - t0, h, hmin, err_norm, factor, nrm
    cdef bint last
    cdef _Buffer buf = _Buffer(1 + 2 * n)

    for i in range(n):
        y[i] = yin[i]
    lmg_rhs(&p, y, f)
    buf.push(t, y, f, n)
    if span > 0.0:
        if first_step > 0.0:
            h = first_step
        else:
            h = initial_step(&p, y, f, n, span, rtol, atol)
        hmin = 1e-14 * fabs(t1)
        with nogil:
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
                for i in range(n):
                    tmp[i] = y[i] + h * (A21 * f[i])
                lmg_rhs(&p, tmp, k2)
                for i in range(n):
                    tmp[i] = y[i] + h * (A31 * f[i] + A32 * k2[i])
                lmg_rhs(&p, tmp, k3)
                for i in range(n):
                    tmp[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i])
                lmg_rhs(&p, tmp, k4)
                for i in range(n):
                    tmp[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                lmg_rhs(&p, tmp, k5)
                for i in range(n):
                    tmp[i] = y[i] + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i])
                lmg_rhs(&p, tmp, k6)
                for i in range(n):
                    ynew[i] = y[i] + h * (B1 * f[i] + B3 * k3[i] + B4 * k4[i]
                                          + B5 * k5[i] + B6 * k6[i])
                lmg_rhs(&p, ynew, k7)
                for i in range(n):
                    err[i] = h * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                                  + E6 * k6[i] + E7 * k7[i])
                err_norm = rms_scaled(err, y, ynew, n, rtol, atol)
                if err_norm <= 1.0:
                    if last:
                        t = t1
                    else:
                        t = t + h
                    for i in range(n):
                        y[i] = ynew[i]
                        f[i] = k7[i]
                    with gil:
                        buf.push(t, y, f, n)
                    nrm = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
                    if nrm > 1.0 + body_tol:
                        status = ESCAPE
                        break
                    if err_norm == 0.0:
                        factor = MAX_FACTOR
                    else:
                        factor = SAFETY * pow(err_norm, -0.2)
                        if factor > MAX_FACTOR:
                            factor = MAX_FACTOR
                    h *= factor
                else:
                    factor = SAFETY * pow(err_norm, -0.2)
                    if factor < MIN_FACTOR:
                        factor = MIN_FACTOR
                    h *= factor

    arr = buf.to_array()
    return (np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1:1 + n]),
            np.ascontiguousarray(arr[:, 1 + n:]), status)


def dicke_liouvillian_coo(int N, double coupling, double field,
                          double collective_rate, double local_rate):
    """COO triplets of the Dicke-basis LMG Liouvillian.

    Same layout and contract as ``permadyn._pykernels.dicke_liouvillian_coo``.
    """
    cdef int nsec = N // 2 + 1
    cdef cnp.int64_t[::1] offsets = np.zeros(N + 3, dtype=np.int64)
    cdef Py_ssize_t dim = 0
    cdef int j2, jmin2 = N % 2
    for j2 in range(jmin2, N + 1, 2):
        offsets[j2] = dim
        dim += (j2 + 1) * (j2 + 1)

    cdef Py_ssize_t cap = 9 * dim
    cdef cnp.int64_t[::1] rows = np.empty(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] cols = np.empty(cap, dtype=np.int64)
    cdef double complex[::1] vals = np.empty(cap, dtype=np.complex128)
    cdef Py_ssize_t nnz = 0, start, target, src
    cdef int n, a, b, k, s2, ns
    cdef double J, Js, ma, mb, xa, xb, ca, cb, pref, coef, Nd = N
    cdef double ha, hb, pa, pb, lad_a, lad_b
    cdef double complex I = 1j

    for j2 in range(jmin2, N + 1, 2):
        n = j2 + 1
        J = 0.5 * j2
        start = offsets[j2]
        for a in range(n):
            ma = a - J
            ha = coupling * (J * (J + 1) - ma * ma) / Nd
            pa = J * (J + 1) - ma * ma + ma
            for b in range(n):
                mb = b - J
                hb = coupling * (J * (J + 1) - mb * mb) / Nd
                pb = J * (J + 1) - mb * mb + mb
                target = start + a * n + b
                rows[nnz] = target
                cols[nnz] = target
                vals[nnz] = (-I * (ha - hb) - 0.5 * collective_rate / Nd * (pa + pb)
                             - 0.5 * local_rate * (Nd - ma - mb))
                nnz += 1
                if field != 0.0:
                    if a + 1 < n:
                        rows[nnz] = target
                        cols[nnz] = target + n
                        vals[nnz] = -I * field * 0.5 * sqrt(J * (J + 1) - ma * (ma + 1))
                        nnz += 1
                    if a >= 1:
                        rows[nnz] = target
                        cols[nnz] = target - n
                        vals[nnz] = -I * field * 0.5 * sqrt(J * (J + 1) - (ma - 1) * ma)
                        nnz += 1
                    if b + 1 < n:
                        rows[nnz] = target
                        cols[nnz] = target + 1
                        vals[nnz] = I * field * 0.5 * sqrt(J * (J + 1) - mb * (mb + 1))
                        nnz += 1
                    if b >= 1:
                        rows[nnz] = target
                        cols[nnz] = target - 1
                        vals[nnz] = I * field * 0.5 * sqrt(J * (J + 1) - (mb - 1) * mb)
                        nnz += 1
                if collective_rate != 0.0 and a + 1 < n and b + 1 < n:
                    lad_a = sqrt(J * (J + 1) - ma * (ma + 1))
                    lad_b = sqrt(J * (J + 1) - mb * (mb + 1))
                    rows[nnz] = target
                    cols[nnz] = target + n + 1
                    vals[nnz] = collective_rate / Nd * lad_a * lad_b
                    nnz += 1
                for k in range(-1, 2):
                    s2 = j2 + 2 * k
                    if s2 < jmin2 or s2 > N:
                        continue
                    Js = 0.5 * s2
                    ns = s2 + 1
                    xa = ma - 1.0
                    xb = mb - 1.0
                    if fabs(xa) > Js or fabs(xb) > Js:
                        continue
                    if k == 1:
                        ca = (Js - xa) * (Js - xa - 1)
                        cb = (Js - xb) * (Js - xb - 1)
                        pref = (Nd / 2 + Js + 1) / (Js * (2 * Js + 1))
                    elif k == 0:
                        if s2 == 0:
                            continue
                        ca = (Js - xa) * (Js + xa + 1)
                        cb = (Js - xb) * (Js + xb + 1)
                        pref = (Nd / 2 + 1) / (Js * (Js + 1))
                    else:
                        ca = (Js + xa + 1) * (Js + xa + 2)
                        cb = (Js + xb + 1) * (Js + xb + 2)
                        pref = (Nd / 2 - Js) / ((Js + 1) * (2 * Js + 1))
                    if ca <= 0.0 or cb <= 0.0:
                        continue
                    # the sign of D_+ cancels in the product
                    coef = 0.5 * local_rate * sqrt(ca) * sqrt(cb) * pref
                    src = offsets[s2] + <Py_ssize_t>(xa + Js + 0.5) * ns + <Py_ssize_t>(xb + Js + 0.5)
                    rows[nnz] = target
                    cols[nnz] = src
                    vals[nnz] = coef
                    nnz += 1

    return (np.asarray(rows[:nnz]).copy(), np.asarray(cols[:nnz]).copy(),
            np.asarray(vals[:nnz]).copy())
