"""Interval enclosures of polynomials over boxes."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Mapping, Sequence, Tuple

from .._accel import ipoly_eval
from .._rational import frac
from ..poly import Poly

Box = Dict[str, Tuple[Fraction, Fraction]]


def fdown(x) -> float:
    """Largest float <= the rational ``x``."""
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def fup(x) -> float:
    """Smallest float >= the rational ``x``."""
    f = float(x)
    if Fraction(f) < x:
        f = math.nextafter(f, math.inf)
    return f


class CompiledPoly:
    """A polynomial prepared for repeated float interval evaluation."""

    __slots__ = ("poly", "coefs", "monos", "names")

    def __init__(self, poly: Poly, names: Sequence[str]):
        index = {v: i for i, v in enumerate(names)}
        self.poly = poly
        self.names = list(names)
        self.coefs = []
        self.monos = []
        for m, c in poly.terms:
            self.coefs.append((fdown(c), fup(c)))
            self.monos.append([(index[v], e) for v, e in m])

    def enclose(self, lo: Sequence[float], hi: Sequence[float]) -> Tuple[float, float]:
        return ipoly_eval(self.coefs, self.monos, lo, hi)


def float_box(box: Mapping[str, Tuple], names: Sequence[str]):
    lo = [fdown(box[v][0]) for v in names]
    hi = [fup(box[v][1]) for v in names]
    return lo, hi


def interval_eval(t: Poly, box: Mapping[str, Tuple]) -> Tuple[Fraction, Fraction]:
    """Outward-rounded enclosure of ``{t(x) : x in box}`` (float core, rational result)."""
    if t.is_constant():
        c = t.constant()
        return c, c
    names = sorted(t.variables())
    missing = [v for v in names if v not in box]
    if missing:
        raise KeyError("no interval for %s" % ", ".join(missing))
    cp = CompiledPoly(t, names)
    lo, hi = float_box(box, names)
    a, b = cp.enclose(lo, hi)
    return Fraction(a), Fraction(b)


def _ipow_exact(lo, hi, e):
    if e % 2 == 1 or lo >= 0:
        return lo ** e, hi ** e
    if hi <= 0:
        return hi ** e, lo ** e
    return Fraction(0), max(-lo, hi) ** e


def exact_interval(t: Poly, box: Mapping[str, Tuple]) -> Tuple[Fraction, Fraction]:
    """Natural interval extension in exact rational arithmetic (monomial-wise)."""
    tlo = Fraction(0)
    thi = Fraction(0)
    for m, c in t.terms:
        lo, hi = frac(c), frac(c)
        for v, e in m:
            plo, phi = _ipow_exact(frac(box[v][0]), frac(box[v][1]), e)
            ps = (lo * plo, lo * phi, hi * plo, hi * phi)
            lo, hi = min(ps), max(ps)
        tlo += lo
        thi += hi
    return tlo, thi


def linear_range(coeffs: Mapping[str, Fraction], const, box: Mapping[str, Tuple]):
    """Exact range of an affine function over a box."""
    lo = hi = frac(const)
    for v, a in coeffs.items():
        a = frac(a)
        l, h = box[v]
        if a >= 0:
            lo += a * l
            hi += a * h
        else:
            lo += a * h
            hi += a * l
    return lo, hi
