# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (J0, kernel matrices, Omega scan).

Mirrors ``_kernels_py`` function for function.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, M_PI, NAN

cnp.import_array()

cdef double[7] PP = [7.96936729297347051624e-4, 8.28352392107440799803e-2,
                     1.23953371646414299388e0, 5.44725003058768775090e0,
                     8.74716500199817011941e0, 5.30324038235394892183e0,
                     9.99999999999999997821e-1]
cdef double[7] PQ = [9.24408810558863637013e-4, 8.56288474354474431428e-2,
                     1.25352743901058953537e0, 5.47097740330417105182e0,
                     8.76190883237069594232e0, 5.30605288235394617618e0,
                     1.00000000000000000218e0]
cdef double[8] QP = [-1.13663838898469149931e-2, -1.28252718670509318512e0,
                     -1.95539544257735972385e1, -9.32060152123768231369e1,
                     -1.77681167980488050595e2, -1.47077505154951170175e2,
                     -5.14105326766599330220e1, -6.05014350600728481186e0]
cdef double[7] QQ = [6.43178256118178023184e1, 8.56430025976980587198e2,
                     3.88240183605401609683e3, 7.24046774195652478189e3,
                     5.93072701187316984827e3, 2.06209331660327847417e3,
                     2.42005740240291393179e2]

cdef double SERIES_LIMIT = 8.0
cdef int SERIES_TERMS = 32
cdef double[33] INV_SQUARES
for _k in range(1, 33):
    INV_SQUARES[_k] = 1.0 / (_k * _k)


cdef inline double _polevl(double x, double* coef, int n) nogil:
    cdef double out = coef[0]
    cdef int i
    for i in range(1, n):
        out = out * x + coef[i]
    return out


cdef inline double _p1evl(double x, double* coef, int n) nogil:
    cdef double out = x + coef[0]
    cdef int i
    for i in range(1, n):
        out = out * x + coef[i]
    return out


cdef double _j0(double x) nogil:
    cdef double t, term, total, w, q, p, qq, c, s, cx, sx
    cdef int k
    x = fabs(x)
    if x < SERIES_LIMIT:
        t = -0.25 * x * x
        term = 1.0
        total = 1.0
        for k in range(1, SERIES_TERMS + 1):
            term = term * t * INV_SQUARES[k]
            total = total + term
            if fabs(term) < 1e-17 * fabs(total):
                break
        return total
    w = 5.0 / x
    q = 25.0 / (x * x)
    p = _polevl(q, PP, 7) / _polevl(q, PQ, 7)
    qq = _polevl(q, QP, 8) / _p1evl(q, QQ, 7)
    c = cos(x)
    s = sin(x)
    cx = (c + s) * sqrt(0.5)
    sx = (s - c) * sqrt(0.5)
    return (p * cx - w * qq * sx) * sqrt(2.0 / M_PI) / sqrt(x)


def j0_array(x):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] src = arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _j0(src[i])
    return out


def kernel_matrix(za, zb, double lambda0):
    cdef double[::1] a = np.ascontiguousarray(za, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(zb, dtype=np.float64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], i, j
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double scale = 2.0 * M_PI / lambda0
    cdef bint same = za is zb
    with nogil:
        if same:
            # symmetric: evaluate one triangle and mirror it
            for i in range(na):
                o[i, i] = 1.0
                for j in range(i + 1, nb):
                    o[i, j] = _j0(scale * fabs(a[i] - b[j]))
                    o[j, i] = o[i, j]
        else:
            for i in range(na):
                for j in range(nb):
                    o[i, j] = _j0(scale * fabs(a[i] - b[j]))
    return out


def omega_objective(fractions, double spacing_over_lambda):
    cdef double[::1] f = np.ascontiguousarray(fractions, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t n = f.shape[0], i
    values = np.empty(n, dtype=np.float64)
    valid = np.empty(n, dtype=np.bool_)
    cdef double[::1] v = values
    cdef cnp.npy_bool[::1] ok = valid
    cdef double two_pi_d = 2.0 * M_PI * spacing_over_lambda
    cdef double eta1 = _j0(two_pi_d)
    cdef double ep, epp, b, disc
    with nogil:
        for i in range(n):
            ep = _j0(two_pi_d * (1.0 - f[i]))
            epp = _j0(two_pi_d * f[i])
            b = 2.0 * eta1 * ep * epp
            disc = b * b - 4.0 * eta1 * eta1 * (ep * ep + epp * epp - 1.0)
            if disc >= 0.0:
                ok[i] = 1
                v[i] = (b - sqrt(disc)) / (2.0 * eta1 * eta1)
            else:
                ok[i] = 0
                v[i] = NAN
    return values.reshape(np.shape(fractions)), valid.reshape(np.shape(fractions))
