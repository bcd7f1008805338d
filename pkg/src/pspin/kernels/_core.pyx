# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: theta-grid bracketing, golden-section and Newton
polish of the classical energy, and the matrix-free sector Hamiltonian
apply.  Mirrors the signatures of the numpy fallback in ``_ref``.
"""

from libc.math cimport cos, exp, fabs, log, sin, sqrt

import numpy as np

cdef double INVPHI = (sqrt(5.0) - 1.0) / 2.0


cdef inline double ipow(double x, long n) noexcept nogil:
    """x**n for n >= 0; large exponents go through exp(n*log|x|)."""
    cdef double r, b, s
    cdef long e
    if n > 64:
        if x == 0.0:
            return 0.0
        s = -1.0 if (x < 0.0 and n % 2 == 1) else 1.0
        return s * exp(n * log(fabs(x)))
    r = 1.0
    b = x
    e = n
    while e:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r


cdef inline double eval_energy(double th, double c1, double c2, double c3,
                               long p, long k) noexcept nogil:
    cdef double st = sin(th)
    cdef double ct = cos(th)
    return c1 * ipow(st, p) + c2 * ipow(ct, k) + c3 * ct


cdef inline double eval_residual(double th, double c1, double c2, double c3,
                                 long p, long k) noexcept nogil:
    cdef double st = sin(th)
    cdef double ct = cos(th)
    return -c1 * p * ipow(st, p - 2) * ct + c2 * k * ipow(ct, k - 1) + c3


cdef inline double eval_residual_derivative(double th, double c1, double c2,
                                            double c3, long p, long k) noexcept nogil:
    cdef double st = sin(th)
    cdef double ct = cos(th)
    return (-c1 * p * ((p - 2) * ipow(st, p - 3) * ct * ct - ipow(st, p - 1))
            - c2 * k * (k - 1) * ipow(ct, k - 2) * st)


def batch_candidate_minima(double[::1] c1, double[::1] c2, double[::1] c3,
                           double[::1] tab_sp, double[::1] tab_ck, double[::1] tab_c,
                           int max_candidates):
    """Indices of up to ``max_candidates`` grid-local minima per row (-1 pad)."""
    cdef Py_ssize_t m = c1.shape[0]
    cdef Py_ssize_t n = tab_sp.shape[0]
    out = np.full((m, max_candidates), -1, dtype=np.int64)
    cdef long long[:, ::1] ov = out
    cdef Py_ssize_t i, j, q, worst
    cdef double a, b, c, e_prev, e_cur, e_next, worst_e
    cdef double[8] cand_e
    cdef long long[8] cand_i
    cdef int n_cand, mc = max_candidates
    if mc > 8:
        raise ValueError("max_candidates must be <= 8")
    with nogil:
        for i in range(m):
            a = c1[i]
            b = c2[i]
            c = c3[i]
            n_cand = 0
            e_prev = a * tab_sp[0] + b * tab_ck[0] + c * tab_c[0]
            e_cur = a * tab_sp[1] + b * tab_ck[1] + c * tab_c[1]
            # left boundary
            if e_prev <= e_cur:
                cand_e[0] = e_prev
                cand_i[0] = 0
                n_cand = 1
            for j in range(1, n - 1):
                e_next = a * tab_sp[j + 1] + b * tab_ck[j + 1] + c * tab_c[j + 1]
                if e_cur <= e_prev and e_cur < e_next:
                    if n_cand < mc:
                        cand_e[n_cand] = e_cur
                        cand_i[n_cand] = j
                        n_cand += 1
                    else:
                        worst = 0
                        worst_e = cand_e[0]
                        for q in range(1, mc):
                            if cand_e[q] > worst_e:
                                worst_e = cand_e[q]
                                worst = q
                        if e_cur < worst_e:
                            cand_e[worst] = e_cur
                            cand_i[worst] = j
                e_prev = e_cur
                e_cur = e_next
            # right boundary: e_cur now holds e[n-1], e_prev holds e[n-2]
            if e_cur < e_prev:
                if n_cand < mc:
                    cand_e[n_cand] = e_cur
                    cand_i[n_cand] = n - 1
                    n_cand += 1
                else:
                    worst = 0
                    worst_e = cand_e[0]
                    for q in range(1, mc):
                        if cand_e[q] > worst_e:
                            worst_e = cand_e[q]
                            worst = q
                    if e_cur < worst_e:
                        cand_e[worst] = e_cur
                        cand_i[worst] = n - 1
            for q in range(n_cand):
                ov[i, q] = cand_i[q]
    return out


def golden_refine(double[::1] c1, double[::1] c2, double[::1] c3,
                  long p, long k, double[::1] lo, double[::1] hi, int iters):
    """Golden-section minimization of the energy on per-row brackets."""
    cdef Py_ssize_t m = c1.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef int it
    cdef double a, b, d, x1, x2, f1, f2, ca, cb, cc
    with nogil:
        for i in range(m):
            a = lo[i]
            b = hi[i]
            ca = c1[i]
            cb = c2[i]
            cc = c3[i]
            for it in range(iters):
                d = INVPHI * (b - a)
                x1 = b - d
                x2 = a + d
                f1 = eval_energy(x1, ca, cb, cc, p, k)
                f2 = eval_energy(x2, ca, cb, cc, p, k)
                if f1 < f2:
                    b = x2
                else:
                    a = x1
            ov[i] = 0.5 * (a + b)
    return out


def newton_refine(double[::1] c1, double[::1] c2, double[::1] c3,
                  long p, long k, double[::1] theta,
                  double[::1] lo, double[::1] hi, int iters):
    """Newton polish of the stationarity residual, clipped to the bracket."""
    cdef Py_ssize_t m = c1.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef int it
    cdef double th, r, dr, cand, r_cand, ca, cb, cc
    with nogil:
        for i in range(m):
            th = theta[i]
            ca = c1[i]
            cb = c2[i]
            cc = c3[i]
            r = eval_residual(th, ca, cb, cc, p, k)
            for it in range(iters):
                dr = eval_residual_derivative(th, ca, cb, cc, p, k)
                if dr == 0.0:
                    break
                cand = th - r / dr
                if cand < lo[i]:
                    cand = lo[i]
                elif cand > hi[i]:
                    cand = hi[i]
                r_cand = eval_residual(cand, ca, cb, cc, p, k)
                if fabs(r_cand) < fabs(r):
                    th = cand
                    r = r_cand
                else:
                    break
            ov[i] = th
    return out


def sector_apply(double[::1] v, double[::1] diag_z, double[::1] w,
                 long k, double coeff_k, double coeff_tf):
    """diag_z*v + coeff_k * T^k v + coeff_tf * T v for tridiagonal T."""
    cdef Py_ssize_t dim = v.shape[0]
    out = np.empty(dim, dtype=np.float64)
    tmp_a = np.empty(dim, dtype=np.float64)
    tmp_b = np.empty(dim, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] ta = tmp_a
    cdef double[::1] tb = tmp_b
    cdef Py_ssize_t i
    cdef long rep
    with nogil:
        # ta = T v
        ta[0] = w[0] * v[1] if dim > 1 else 0.0
        for i in range(1, dim - 1):
            ta[i] = w[i - 1] * v[i - 1] + w[i] * v[i + 1]
        if dim > 1:
            ta[dim - 1] = w[dim - 2] * v[dim - 2]
        for i in range(dim):
            ov[i] = diag_z[i] * v[i] + coeff_tf * ta[i]
        # tb cycles through T^2 v .. T^k v
        for rep in range(k - 1):
            tb[0] = w[0] * ta[1] if dim > 1 else 0.0
            for i in range(1, dim - 1):
                tb[i] = w[i - 1] * ta[i - 1] + w[i] * ta[i + 1]
            if dim > 1:
                tb[dim - 1] = w[dim - 2] * ta[dim - 2]
            for i in range(dim):
                ta[i] = tb[i]
        for i in range(dim):
            ov[i] += coeff_k * ta[i]
    return out
