"""Pure-Python versions of the hot kernels.

``_kernels.pyx`` implements the same functions; :mod:`mosaicverify._accel`
picks one at import time.  Both must return identical results.
"""
import math

_INF = math.inf


def row_axpy(dst, src, factor, skip):
    """``dst += factor * src`` on sparse dict rows, ignoring key ``skip``.

    Returns ``(added, removed)`` key lists so callers can maintain column
    indices.
    """
    added = []
    removed = []
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


def _down(x):
    return math.nextafter(x, -_INF)


def _up(x):
    return math.nextafter(x, _INF)


def _pdown(x, e):
    # libm pow is faithful (< 1 ulp); two steps keep the bound safe
    if abs(x) == _INF:
        return x if e % 2 or x > 0 else _INF
    return _down(_down(x ** e))


def _pup(x, e):
    if abs(x) == _INF:
        return x if e % 2 or x > 0 else _INF
    return _up(_up(x ** e))


def _ipow(lo, hi, e):
    if e == 1:
        return lo, hi
    if e % 2 == 0:
        if lo >= 0:
            a, b = lo, hi
        elif hi <= 0:
            a, b = -hi, -lo
        else:
            return 0.0, _pup(max(-lo, hi), e)
        return max(_pdown(a, e), 0.0), _pup(b, e)
    return _pdown(lo, e), _pup(hi, e)


def _imul(alo, ahi, blo, bhi):
    ps = []
    for x in (alo, ahi):
        for y in (blo, bhi):
            if (x == 0 and abs(y) == _INF) or (y == 0 and abs(x) == _INF):
                ps.append(0.0)
            else:
                ps.append(x * y)
    return _down(min(ps)), _up(max(ps))


def ipoly_eval(coefs, monos, lo, hi):
    """Outward-rounded interval enclosure of a polynomial over a box.

    ``coefs`` is a list of ``(clo, chi)`` float enclosures of the rational
    coefficients, ``monos`` a parallel list of ``[(var_index, exp), ...]``
    and ``lo``/``hi`` the box bounds per variable index.
    """
    tlo = 0.0
    thi = 0.0
    for (clo, chi), mono in zip(coefs, monos):
        mlo, mhi = clo, chi
        for vi, e in mono:
            plo, phi = _ipow(lo[vi], hi[vi], e)
            mlo, mhi = _imul(mlo, mhi, plo, phi)
        tlo = _down(tlo + mlo)
        thi = _up(thi + mhi)
    return tlo, thi
