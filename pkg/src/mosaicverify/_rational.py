"""Exact rational number helpers.

The engine computes with ``Q``: ``gmpy2.mpq`` when gmpy2 is importable and
``fractions.Fraction`` otherwise.  Both types interoperate, hash equally and
compare exactly.  Public results are converted back to ``Fraction``.
"""
from __future__ import annotations

import os
from fractions import Fraction
from decimal import Decimal

try:  # pragma: no cover - depends on the environment
    if os.environ.get("MOSAIC_VERIFY_NO_GMPY"):
        raise ImportError
    import gmpy2

    Q = gmpy2.mpq
    HAVE_GMPY = True
except ImportError:  # pragma: no cover
    Q = Fraction
    HAVE_GMPY = False

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Convert ints, strings, decimals, Fractions or mpq values to ``Fraction``.

    Floats are rejected: a binary float silently changes the value of
    decimal literals such as ``0.1``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, float):
        raise TypeError("refusing to convert float %r to an exact rational; pass a string" % x)
    num = getattr(x, "numerator", None)
    den = getattr(x, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    raise TypeError("cannot convert %r to a rational" % (x,))


def q(x):
    """Convert to the engine number type."""
    if HAVE_GMPY:
        if isinstance(x, Fraction):
            return Q(x.numerator, x.denominator)
        return Q(x)
    return frac(x)


def fmt(x) -> str:
    """Render a rational as ``n`` or ``n/d``."""
    x = frac(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def parse_rational(text) -> Fraction:
    """Parse JSON-ish numbers: ints, decimal strings, ``a/b`` strings.

    JSON floats arrive as Python floats; their repr is the shortest decimal
    that round-trips, which is what the author wrote, so we go through it.
    """
    if isinstance(text, float):
        return Fraction(repr(text))
    return frac(text)
