# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, log, exp

cnp.import_array()

BACKEND = "cython"

cdef Py_ssize_t _BLOCK = 128


cdef double _pairwise(const double[::1] a, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t i, mid
    cdef double s
    if hi - lo <= _BLOCK:
        s = 0.0
        for i in range(lo, hi):
            s += a[i]
        return s
    mid = lo + ((hi - lo) // 2)
    return _pairwise(a, lo, mid) + _pairwise(a, mid, hi)


def ratio_powers(x, w, double scale, double e1, double e2):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef const double[::1] wv
    cdef bint has_w = w is not None
    if has_w:
        wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef bint want1 = e1 >= 2.0
    cdef bint want2 = e2 >= 2.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t1 = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t2 = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c1 = np.empty(n if want1 else 0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c2 = np.empty(n if want2 else 0)
    cdef double[::1] t1v = t1, t2v = t2, c1v = c1, c2v = c2
    cdef double inv = 1.0 / scale
    cdef double t, tt, a, b, ww
    cdef Py_ssize_t i
    cdef double f1 = e1 - 2.0 if want1 else e1
    cdef double f2 = e2 - 2.0 if want2 else e2
    cdef double lt
    with nogil:
        for i in range(n):
            # one log and two exp instead of two pow calls
            t = xv[i] * inv
            ww = wv[i] if has_w else 1.0
            if t > 0.0:
                lt = log(t)
                a = exp(f1 * lt)
                b = exp(f2 * lt)
            else:
                a = 1.0 if f1 == 0.0 else 0.0
                b = 1.0 if f2 == 0.0 else 0.0
            tt = t * t if t > 0.0 else 0.0
            if want1:
                c1v[i] = a
                t1v[i] = ww * (a * tt)
            else:
                t1v[i] = ww * a
            if want2:
                c2v[i] = b
                t2v[i] = ww * (b * tt)
            else:
                t2v[i] = ww * b
        s1 = _pairwise(t1v, 0, n)
        s2 = _pairwise(t2v, 0, n)
    return s1, s2, (c1 if want1 else None), (c2 if want2 else None)


def midrange_sweep(u, free, Py_ssize_t nx, Py_ssize_t ny):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const unsigned char[::1] fv = np.ascontiguousarray(free, dtype=np.uint8)
    out = np.array(uv, copy=True)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, k
    cdef double hi, lo, v, change = 0.0, d
    with nogil:
        for j in range(1, ny - 1):
            for i in range(1, nx - 1):
                k = j * nx + i
                if not fv[k]:
                    continue
                hi = uv[k - nx - 1]
                lo = hi
                v = uv[k - nx]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k - nx + 1]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k - 1]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k + 1]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k + nx - 1]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k + nx]
                if v > hi: hi = v
                if v < lo: lo = v
                v = uv[k + nx + 1]
                if v > hi: hi = v
                if v < lo: lo = v
                v = 0.5 * (hi + lo)
                d = fabs(v - uv[k])
                if d > change:
                    change = d
                ov[k] = v
    return out, change


cdef double _D[8]
_D[:] = [1.4142135623730951, 1.0, 1.4142135623730951, 1.0, 1.0, 1.4142135623730951, 1.0, 1.4142135623730951]


def midrange_sweep_weighted(u, free, Py_ssize_t nx, Py_ssize_t ny):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const unsigned char[::1] fv = np.ascontiguousarray(free, dtype=np.uint8)
    out = np.array(uv, copy=True)
    cdef double[::1] ov = out
    cdef Py_ssize_t off[8]
    off[0] = -nx - 1; off[1] = -nx; off[2] = -nx + 1; off[3] = -1
    off[4] = 1; off[5] = nx - 1; off[6] = nx; off[7] = nx + 1
    cdef Py_ssize_t i, j, k, a, b
    cdef double nb[8]
    cdef double best, m, v, d, change = 0.0
    with nogil:
        for j in range(1, ny - 1):
            for i in range(1, nx - 1):
                k = j * nx + i
                if not fv[k]:
                    continue
                for a in range(8):
                    nb[a] = uv[k + off[a]]
                best = 1e308
                for b in range(8):
                    m = -1e308
                    for a in range(8):
                        v = (_D[b] * nb[a] + _D[a] * nb[b]) / (_D[a] + _D[b])
                        if v > m:
                            m = v
                    if m < best:
                        best = m
                d = fabs(best - uv[k])
                if d > change:
                    change = d
                ov[k] = best
    return out, change
