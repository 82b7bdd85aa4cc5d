# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""
from libc.math cimport nextafter, pow, INFINITY, fabs


def row_axpy(dict dst, dict src, factor, skip):
    cdef list added = []
    cdef list removed = []
    cdef object k, v, old, nv
    for k, v in src.items():
        if k == skip:
            continue
        old = dst.get(k)
        if old is None:
            dst[k] = factor * v
            added.append(k)
        else:
            nv = old + factor * v
            if nv == 0:
                del dst[k]
                removed.append(k)
            else:
                dst[k] = nv
    return added, removed


cdef inline double _down(double x):
    return nextafter(x, -INFINITY)


cdef inline double _up(double x):
    return nextafter(x, INFINITY)


cdef inline double _pdown(double x, int e):
    if fabs(x) == INFINITY:
        return x if (e % 2 or x > 0) else INFINITY
    return _down(_down(pow(x, e)))


cdef inline double _pup(double x, int e):
    if fabs(x) == INFINITY:
        return x if (e % 2 or x > 0) else INFINITY
    return _up(_up(pow(x, e)))


cdef inline void _ipow(double lo, double hi, int e, double* rlo, double* rhi):
    cdef double a, b
    if e == 1:
        rlo[0] = lo
        rhi[0] = hi
        return
    if e % 2 == 0:
        if lo >= 0:
            a = lo
            b = hi
        elif hi <= 0:
            a = -hi
            b = -lo
        else:
            rlo[0] = 0.0
            rhi[0] = _pup(max(-lo, hi), e)
            return
        rlo[0] = max(_pdown(a, e), 0.0)
        rhi[0] = _pup(b, e)
        return
    rlo[0] = _pdown(lo, e)
    rhi[0] = _pup(hi, e)


cdef inline double _prod(double x, double y):
    if (x == 0 and fabs(y) == INFINITY) or (y == 0 and fabs(x) == INFINITY):
        return 0.0
    return x * y


cdef inline void _imul(double alo, double ahi, double blo, double bhi, double* rlo, double* rhi):
    cdef double p1 = _prod(alo, blo)
    cdef double p2 = _prod(alo, bhi)
    cdef double p3 = _prod(ahi, blo)
    cdef double p4 = _prod(ahi, bhi)
    rlo[0] = _down(min(min(p1, p2), min(p3, p4)))
    rhi[0] = _up(max(max(p1, p2), max(p3, p4)))


def ipoly_eval(list coefs, list monos, lo, hi):
    cdef double tlo = 0.0, thi = 0.0
    cdef double mlo, mhi, plo, phi
    cdef Py_ssize_t i, n = len(coefs)
    cdef int vi, e
    cdef list mono
    for i in range(n):
        c = coefs[i]
        mlo = c[0]
        mhi = c[1]
        mono = monos[i]
        for ve in mono:
            vi = ve[0]
            e = ve[1]
            _ipow(lo[vi], hi[vi], e, &plo, &phi)
            _imul(mlo, mhi, plo, phi, &mlo, &mhi)
        tlo = _down(tlo + mlo)
        thi = _up(thi + mhi)
    return tlo, thi
