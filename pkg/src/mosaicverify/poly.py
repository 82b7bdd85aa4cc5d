"""Multivariate polynomials with exact rational coefficients."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple

from ._rational import fmt, frac

# A monomial is a sorted tuple of (variable, exponent) pairs; () is the constant.
Monomial = Tuple[Tuple[str, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_key(m: Monomial):
    # higher degree first, then lexicographic on the variable/exponent list
    return (-mono_degree(m), m)


class Poly:
    """Immutable polynomial ``sum(coef * monomial)``.

    Zero coefficients are never stored, so structural equality is semantic
    equality.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | Iterable = ()):
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        d: Dict[Monomial, Fraction] = {}
        for m, c in items:
            c = frac(c)
            if c == 0:
                continue
            m = tuple(sorted((v, e) for v, e in m if e != 0))
            for _, e in m:
                if e < 0:
                    raise ValueError("negative exponent")
            c = d.get(m, 0) + c
            if c == 0:
                d.pop(m, None)
            else:
                d[m] = c
        self._terms = tuple(sorted(d.items(), key=lambda mc: _mono_key(mc[0])))
        self._hash = None

    # construction -------------------------------------------------------
    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): frac(c)})

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly({((name, 1),): Fraction(1)})

    @staticmethod
    def linear(coeffs: Mapping[str, Fraction], constant=0) -> "Poly":
        d = {((v, 1),): c for v, c in coeffs.items()}
        d[()] = frac(constant)
        return Poly(d)

    # inspection ----------------------------------------------------------
    @property
    def terms(self) -> Tuple[Tuple[Monomial, Fraction], ...]:
        return self._terms

    def as_dict(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((mono_degree(m) for m, _ in self._terms), default=0)

    def variables(self) -> frozenset:
        return frozenset(v for m, _ in self._terms for v, _ in m)

    def is_constant(self) -> bool:
        return all(not m for m, _ in self._terms)

    def constant(self) -> Fraction:
        for m, c in self._terms:
            if not m:
                return c
        return Fraction(0)

    def is_linear(self) -> bool:
        return self.degree() <= 1

    def linear_coeffs(self) -> Dict[str, Fraction]:
        """Coefficients of the degree-1 monomials (requires degree <= 1 for meaning)."""
        return {m[0][0]: c for m, c in self._terms if len(m) == 1 and m[0][1] == 1}

    def leading_coeff(self) -> Fraction:
        """Coefficient of the first non-constant monomial in canonical order."""
        for m, c in self._terms:
            if m:
                return c
        return self.constant()

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        d = self.as_dict()
        for m, c in other._terms:
            d[m] = d.get(m, 0) + c
        return Poly(d)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self._terms})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __mul__(self, other):
        other = _lift(other)
        d: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms:
            for m2, c2 in other._terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return Poly(d)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = frac(c)
        return Poly({m: c * k for m, k in self._terms})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # evaluation ----------------------------------------------------------
    def evaluate(self, state: Mapping[str, object]):
        """Exact evaluation; values may be Fraction, int or mpq."""
        total = 0
        for m, c in self._terms:
            t = c
            for v, e in m:
                try:
                    x = state[v]
                except KeyError:
                    raise KeyError("no value for variable %r" % v) from None
                t = t * (x ** e if e != 1 else x)
            total = total + t
        return total

    def substitute(self, mapping: Mapping[str, "Poly"]) -> "Poly":
        out = Poly()
        for m, c in self._terms:
            t = Poly.const(c)
            for v, e in m:
                if v in mapping:
                    t = t * (mapping[v] ** e)
                else:
                    t = t * Poly({((v, e),): Fraction(1)})
            out = out + t
        return out

    # equality / hashing ------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Poly.const(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __repr__(self):
        return "Poly(%s)" % self.to_text()

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self._terms):
            neg = c < 0
            a = -c if neg else c
            factors = []
            if a != 1 or not m:
                factors.append(fmt(a))
            for v, e in m:
                factors.append(v if e == 1 else "%s^%d" % (v, e))
            body = "*".join(factors)
            if i == 0:
                parts.append("-" + body if neg else body)
            else:
                parts.append((" - " if neg else " + ") + body)
        return "".join(parts)


def _lift(x) -> Poly:
    if isinstance(x, Poly):
        return x
    return Poly.const(x)
