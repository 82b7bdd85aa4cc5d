"""Piecewise-linear over/under-approximation of nonlinear atoms.

For a canonical atom ``t <= 0`` (or ``t < 0``) we build piecewise-linear
functions ``lower <= t <= upper`` valid on the range box.  Then
``lower <= 0`` is implied by the atom (over-approximation) and
``upper <= 0`` implies it (under-approximation).

The term is split into an affine part, a quadratic form and higher-degree
monomials.  The quadratic form is diagonalised exactly into a signed sum of
squares of linear forms, ``sum d_k * l_k(x)^2``; each square of a bounded
linear form is then bounded by chords, tangents and a guarded step
function.  Univariate powers ``c*v^k`` (k >= 3) get chord/tangent bounds per
convexity region and any remaining mixed monomial falls back to constant
interval bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ._rational import frac
from .formula import (CAtom, Formula, Implies, Lit, TRUE, And, Not, conj, disj,
                      atoms_of, canonicalize, lit_of, nnf, split_equalities, FALSE, Const)
from .poly import Poly, mono_degree
from .theory.interval import exact_interval, linear_range

DEFAULT_EPS = Fraction(1, 10 ** 6)
MODES = ("overt", "interval")


# ---------------------------------------------------------------------------
# piecewise-linear expressions

class PL:
    """Piecewise-linear expression over the original variables."""

    def scale(self, d) -> "PL":
        raise NotImplementedError

    def shift(self, lin: Poly) -> "PL":
        raise NotImplementedError

    def evaluate(self, state):
        raise NotImplementedError

    def pieces(self) -> int:
        return 1


@dataclass(frozen=True)
class PLin(PL):
    f: Poly

    def scale(self, d):
        return PLin(self.f.scale(d))

    def shift(self, lin):
        return PLin(self.f + lin)

    def evaluate(self, state):
        return self.f.evaluate(state)


@dataclass(frozen=True)
class PMax(PL):
    children: Tuple[PL, ...]

    def scale(self, d):
        kids = tuple(c.scale(d) for c in self.children)
        return PMax(kids) if d >= 0 else PMin(kids)

    def shift(self, lin):
        return PMax(tuple(c.shift(lin) for c in self.children))

    def evaluate(self, state):
        return max(c.evaluate(state) for c in self.children)

    def pieces(self):
        return sum(c.pieces() for c in self.children)


@dataclass(frozen=True)
class PMin(PL):
    children: Tuple[PL, ...]

    def scale(self, d):
        kids = tuple(c.scale(d) for c in self.children)
        return PMin(kids) if d >= 0 else PMax(kids)

    def shift(self, lin):
        return PMin(tuple(c.shift(lin) for c in self.children))

    def evaluate(self, state):
        return min(c.evaluate(state) for c in self.children)

    def pieces(self):
        return sum(c.pieces() for c in self.children)


@dataclass(frozen=True)
class PGuard(PL):
    """``child_k`` wherever ``a_k <= s(x) <= b_k``; pieces cover the range of ``s``.

    Where pieces overlap, each child is a valid bound, so evaluation may
    pick any of them; :meth:`evaluate` takes the first matching piece.
    """

    s: Poly
    pieces_: Tuple[Tuple[Fraction, Fraction, PL], ...]

    def scale(self, d):
        return PGuard(self.s, tuple((a, b, c.scale(d)) for a, b, c in self.pieces_))

    def shift(self, lin):
        return PGuard(self.s, tuple((a, b, c.shift(lin)) for a, b, c in self.pieces_))

    def evaluate(self, state):
        v = self.s.evaluate(state)
        for a, b, c in self.pieces_:
            if a <= v <= b:
                return c.evaluate(state)
        raise ValueError("point outside every guard")

    def evaluate_all(self, state):
        v = self.s.evaluate(state)
        return [c.evaluate(state) for a, b, c in self.pieces_ if a <= v <= b]

    def pieces(self):
        return sum(c.pieces() for _, _, c in self.pieces_)


def _const(c) -> PLin:
    return PLin(Poly.const(c))


# ---------------------------------------------------------------------------
# max-of-affine upper bound

@dataclass(frozen=True)
class MaxBoundParams:
    mu: Fraction
    c: Fraction
    gamma: Fraction
    x_f: Dict[str, Fraction]
    x_g: Dict[str, Fraction]

    def bound(self, f: Poly, g: Poly) -> Poly:
        return f.scale(self.mu) + g.scale(1 - self.mu) + self.c


@dataclass(frozen=True)
class NotApplicable:
    dominant: str  # "f" or "g"


def _argmax_vertex(h: Poly, box: Mapping[str, Tuple]) -> Dict[str, Fraction]:
    coeffs = h.linear_coeffs()
    point = {}
    for v in sorted(set(box) | set(coeffs)):
        lo, hi = box[v]
        point[v] = frac(hi) if coeffs.get(v, 0) > 0 else frac(lo)
    return point


def max_upper_bound(f: Poly, g: Poly, box: Mapping[str, Tuple]):
    """Affine ``h >= max(f, g)`` on ``box`` touching f at x_f and g at x_g.

    ``x_f`` maximises f - g and ``x_g`` maximises g - f over the box (box
    vertices, exact).  ``mu`` and ``c`` solve the two interpolation
    equations ``h(x_f) = f(x_f)`` and ``h(x_g) = g(x_g)`` directly.
    """
    if f.degree() > 1 or g.degree() > 1:
        raise ValueError("max_upper_bound expects affine functions")
    x_f = _argmax_vertex(f - g, box)
    x_g = _argmax_vertex(g - f, box)
    d_f = (f - g).evaluate(x_f)
    d_g = (g - f).evaluate(x_g)
    if d_f <= 0:
        return NotApplicable("g")
    if d_g <= 0:
        return NotApplicable("f")
    gamma = d_f + d_g
    mu = d_f / gamma
    c = d_f * d_g / gamma
    return MaxBoundParams(frac(mu), frac(c), frac(gamma), x_f, x_g)


def _max_line(f: Poly, g: Poly, box) -> Poly:
    r = max_upper_bound(f, g, box)
    if isinstance(r, NotApplicable):
        return f if r.dominant == "f" else g
    return r.bound(f, g)


def _min_line(f: Poly, g: Poly, box) -> Poly:
    # min(f, g) = -max(-f, -g) >= -h
    return -_max_line(-f, -g, box)


def _centre(box):
    return {v: (frac(lo) + frac(hi)) / 2 for v, (lo, hi) in box.items()}


def reduce_up(e: PL, box) -> Poly:
    """An affine function >= e on the box."""
    if isinstance(e, PLin):
        return e.f
    if isinstance(e, PMax):
        lines = [reduce_up(c, box) for c in e.children]
        acc = lines[0]
        for ln in lines[1:]:
            acc = _max_line(acc, ln, box)
        return acc
    if isinstance(e, PMin):
        lines = [reduce_up(c, box) for c in e.children]
        ctr = _centre(box)
        return min(lines, key=lambda ln: ln.evaluate(ctr))
    if isinstance(e, PGuard):
        return Poly.const(max(linear_range(reduce_up(c, box).linear_coeffs(),
                                           reduce_up(c, box).constant(), box)[1]
                              for _, _, c in e.pieces_))
    raise TypeError(e)


def reduce_down(e: PL, box) -> Poly:
    """An affine function <= e on the box."""
    if isinstance(e, PLin):
        return e.f
    if isinstance(e, PMin):
        lines = [reduce_down(c, box) for c in e.children]
        acc = lines[0]
        for ln in lines[1:]:
            acc = _min_line(acc, ln, box)
        return acc
    if isinstance(e, PMax):
        lines = [reduce_down(c, box) for c in e.children]
        ctr = _centre(box)
        return max(lines, key=lambda ln: ln.evaluate(ctr))
    if isinstance(e, PGuard):
        return Poly.const(min(linear_range(reduce_down(c, box).linear_coeffs(),
                                           reduce_down(c, box).constant(), box)[0]
                              for _, _, c in e.pieces_))
    raise TypeError(e)


# ---------------------------------------------------------------------------
# univariate bounds

def _breakpoints(lo, hi, n, extra=()):
    pts = {lo + (hi - lo) * i / n for i in range(n + 1)}
    pts.update(p for p in extra if lo < p < hi)
    return sorted(pts)


def _power_line_chord(c, k, p, q, s: Poly) -> Poly:
    fp, fq = c * p ** k, c * q ** k
    slope = (fq - fp) / (q - p)
    return s.scale(slope) + (fp - slope * p)


def _power_line_tangent(c, k, p, s: Poly) -> Poly:
    slope = c * k * p ** (k - 1)
    return s.scale(slope) + (c * p ** k - slope * p)


def _convex_on(c, k, p, q) -> bool:
    """Whether c*v^k is convex on [p, q] (an interval not straddling 0)."""
    if k % 2 == 0 or p >= 0:
        return c > 0
    return c < 0  # odd power on the negative side flips curvature


@dataclass(frozen=True)
class UnivariatePiece:
    lo: Fraction
    hi: Fraction
    over: Poly
    under: Poly
    convex: bool


def univariate_bounds(c, k: int, lo, hi, n: int, var: str = "v") -> List[UnivariatePiece]:
    """Per-piece linear bounds of ``c*var^k`` on ``[lo, hi]`` split into ``n`` pieces.

    Convex pieces get the secant above and the midpoint tangent below;
    concave pieces the reverse.  For odd ``k`` the point 0 is an extra
    breakpoint so every piece has constant curvature.
    """
    if n < 1:
        raise ValueError("piece count must be >= 1")
    c, lo, hi = frac(c), frac(lo), frac(hi)
    s = Poly.var(var)
    if k == 1:
        return [UnivariatePiece(lo, hi, s.scale(c), s.scale(c), True)]
    if k == 0:
        return [UnivariatePiece(lo, hi, Poly.const(c), Poly.const(c), True)]
    pts = _breakpoints(lo, hi, n, extra=(0,) if k % 2 else ())
    out = []
    for p, q in zip(pts, pts[1:]):
        mid = (p + q) / 2
        chord = _power_line_chord(c, k, p, q, s)
        tan = _power_line_tangent(c, k, mid, s)
        cv = _convex_on(c, k, p, q)
        out.append(UnivariatePiece(p, q, chord if cv else tan, tan if cv else chord, cv))
    if len(pts) == 1:
        v = c * lo ** k
        out.append(UnivariatePiece(lo, hi, Poly.const(v), Poly.const(v), True))
    return out


def _tangent_points(lo, hi, n):
    # interior breakpoints and piece midpoints; the set for 2n contains the set for n
    w = hi - lo
    return sorted({lo + w * i / (2 * n) for i in range(1, 2 * n)})


def _region_bounds(c, k, lo, hi, n, s: Poly) -> Tuple[PL, PL]:
    """(lower, upper) of c*s^k on a constant-curvature region."""
    pts = _breakpoints(lo, hi, n)
    chords = tuple(PLin(_power_line_chord(c, k, p, q, s)) for p, q in zip(pts, pts[1:]))
    tans = tuple(PLin(_power_line_tangent(c, k, p, s)) for p in _tangent_points(lo, hi, n))
    if _convex_on(c, k, lo, hi):
        return _mk(PMax, tans), _mk(PMax, chords)
    return _mk(PMin, chords), _mk(PMin, tans)


def _mk(cls, kids):
    kids = tuple(dict.fromkeys(kids))
    return kids[0] if len(kids) == 1 else cls(kids)


def power_bounds(c, k: int, s: Poly, lo, hi, n: int) -> Tuple[PL, PL]:
    """(lower, upper) piecewise-linear bounds of ``c * s(x)^k`` for ``s`` in ``[lo, hi]``."""
    c, lo, hi = frac(c), frac(lo), frac(hi)
    if lo == hi:
        return _const(c * lo ** k), _const(c * lo ** k)
    if k % 2 == 1 and lo < 0 < hi:
        l1, u1 = _region_bounds(c, k, lo, Fraction(0), n, s)
        l2, u2 = _region_bounds(c, k, Fraction(0), hi, n, s)
        return (PGuard(s, ((lo, Fraction(0), l1), (Fraction(0), hi, l2))),
                PGuard(s, ((lo, Fraction(0), u1), (Fraction(0), hi, u2))))
    return _region_bounds(c, k, lo, hi, n, s)


def square_bounds(s: Poly, lo, hi, n: int) -> Tuple[PL, PL]:
    """(lower, upper) bounds of ``s(x)^2`` for ``s`` ranging over ``[lo, hi]``.

    lower: max of tangents; upper: min of the chord interpolant and a
    guarded step function whose value on each half-piece is its maximum.
    """
    lo, hi = frac(lo), frac(hi)
    if lo == hi:
        return _const(lo * lo), _const(lo * lo)
    lower, chords = _region_bounds(Fraction(1), 2, lo, hi, n, s)
    halves = _breakpoints(lo, hi, 2 * n)
    step = PGuard(s, tuple((p, q, _const(max(p * p, q * q))) for p, q in zip(halves, halves[1:])))
    return lower, PMin((chords, step))


# ---------------------------------------------------------------------------
# exact diagonalisation of quadratic forms

def diagonalize(qform: Poly) -> List[Tuple[Fraction, Poly]]:
    """Write a homogeneous quadratic as ``sum d * l(x)^2`` with linear forms ``l``."""
    out: List[Tuple[Fraction, Poly]] = []
    rest = qform
    while not rest.is_zero():
        terms = rest.as_dict()
        names = sorted(rest.variables())
        diag = [v for v in names if terms.get(((v, 2),), 0) != 0]
        if diag:
            v = diag[0]
            a = terms[((v, 2),)]
            # a*v^2 + v*B(x) + C = a*(v + B/(2a))^2 + C - B^2/(4a)
            b_lin = Poly({tuple(x for x in m if x[0] != v): c for m, c in terms.items()
                          if (v, 1) in m})
            ell = Poly.var(v) + b_lin.scale(1 / (2 * a))
            out.append((a, ell))
            rest = rest - (ell * ell).scale(a)
            continue
        # only cross terms: pick the first one, b*v*w
        (m, b) = next((m, c) for m, c in rest.terms if len(m) == 2)
        v, w = m[0][0], m[1][0]
        # b*v*w + v*A + w*B + C = b*(v + B/b)*(w + A/b) - A*B/b + C
        a_lin = Poly({tuple(x for x in mm if x[0] != v): c for mm, c in terms.items()
                      if (v, 1) in mm and mm != m})
        b_lin = Poly({tuple(x for x in mm if x[0] != w): c for mm, c in terms.items()
                      if (w, 1) in mm and mm != m})
        p_ = Poly.var(v) + b_lin.scale(1 / b)
        r_ = Poly.var(w) + a_lin.scale(1 / b)
        # b*P*R = b/4*(P+R)^2 - b/4*(P-R)^2
        out.append((b / 4, p_ + r_))
        out.append((-b / 4, p_ - r_))
        rest = rest - (p_ * r_).scale(b)
    return out


# ---------------------------------------------------------------------------
# term bounds

def _split_term(t: Poly):
    lin, quad, high = {}, {}, []
    for m, c in t.terms:
        d = mono_degree(m)
        if d <= 1:
            lin[m] = c
        elif d == 2:
            quad[m] = c
        else:
            high.append((m, c))
    return Poly(lin), Poly(quad), high


def term_bounds(t: Poly, box: Mapping[str, Tuple], n: int = 1, mode: str = "overt"):
    """Piecewise-linear ``(lower, upper)`` with ``lower <= t <= upper`` on ``box``."""
    if mode not in MODES:
        raise ValueError("unknown approximation mode %r" % mode)
    lin, quad, high = _split_term(t)
    if mode == "interval":
        lo, hi = exact_interval(quad + Poly(dict(high)), box)
        return PLin(lin + lo), PLin(lin + hi)
    lowers: List[PL] = []
    uppers: List[PL] = []
    for d, ell in diagonalize(quad):
        slo, shi = linear_range(ell.linear_coeffs(), ell.constant(), box)
        lo_b, up_b = square_bounds(ell, slo, shi, n)
        if d > 0:
            lowers.append(lo_b.scale(d))
            uppers.append(up_b.scale(d))
        else:
            lowers.append(up_b.scale(d))
            uppers.append(lo_b.scale(d))
    for m, c in high:
        if len(m) == 1:
            v, k = m[0]
            lo, hi = box[v]
            lo_b, up_b = power_bounds(c, k, Poly.var(v), lo, hi, n)
            lowers.append(lo_b)
            uppers.append(up_b)
        else:
            lo, hi = exact_interval(Poly({m: c}), box)
            lowers.append(_const(lo))
            uppers.append(_const(hi))
    return _combine(lin, lowers, box, down=True), _combine(lin, uppers, box, down=False)


def _combine(lin: Poly, parts: Sequence[PL], box, down: bool) -> PL:
    """Sum ``lin + sum(parts)`` keeping at most one multi-piece part."""
    acc = lin
    keep: Optional[PL] = None
    for p in parts:
        if isinstance(p, PLin):
            acc = acc + p.f
        elif keep is None:
            keep = p
        else:
            acc = acc + (reduce_down(p, box) if down else reduce_up(p, box))
    if keep is None:
        return PLin(acc)
    return keep.shift(acc)


# ---------------------------------------------------------------------------
# formulas

def _guard(s: Poly, a, b, box, widen) -> Formula:
    slo, shi = linear_range(s.linear_coeffs(), s.constant(), box)
    parts = []
    if a > slo:
        parts.append(lit_of(Poly.const(a - widen) - s, "<="))
    if b < shi:
        parts.append(lit_of(s - (b + widen), "<="))
    return conj(parts)


def expand(e: PL, rel: str, box, widen=Fraction(0)) -> Formula:
    """Linear formula equivalent to ``e rel 0`` (rel is ``<`` or ``<=``).

    Guards are widened by ``widen``; pass a positive value only when building
    over-approximations.
    """
    if isinstance(e, PLin):
        return lit_of(e.f, rel)
    if isinstance(e, PMax):
        return conj(expand(c, rel, box, widen) for c in e.children)
    if isinstance(e, PMin):
        return disj(expand(c, rel, box, widen) for c in e.children)
    if isinstance(e, PGuard):
        return disj(conj([_guard(e.s, a, b, box, widen), expand(c, rel, box, widen)])
                    for a, b, c in e.pieces_)
    raise TypeError(e)


@dataclass(frozen=True)
class AtomApprox:
    """Linear over- and under-approximation of one nonlinear atom on the range box."""

    atom: object
    over: Formula
    under: Formula
    lower: Optional[PL] = None
    upper: Optional[PL] = None


def approximate_catom(atom: CAtom, box, n: int = 1, eps=DEFAULT_EPS, mode: str = "overt") -> AtomApprox:
    if atom.rel == "=":
        le = approximate_catom(CAtom(atom.term, "<="), box, n, eps, mode)
        lt = approximate_catom(CAtom(atom.term, "<"), box, n, eps, mode)
        return AtomApprox(atom, conj([le.over, nnf(Not(lt.under))]),
                          conj([le.under, nnf(Not(lt.over))]))
    lower, upper = term_bounds(atom.term, box, n, mode)
    over = expand(lower, atom.rel, box, widen=frac(eps))
    under = expand(upper, atom.rel, box)
    return AtomApprox(atom, over, under, lower, upper)


def linearize_atom(atom, ranges: Mapping[str, Tuple], n: int = 1, eps=DEFAULT_EPS,
                   mode: str = "overt") -> AtomApprox:
    """Approximations of a user-level or canonical nonlinear atom."""
    if isinstance(atom, CAtom):
        if atom.is_linear():
            raise ValueError("atom is linear; nothing to approximate")
        return approximate_catom(atom, ranges, n, eps, mode)
    if atom.lhs.degree() <= 1:
        raise ValueError("atom is linear; nothing to approximate")
    c = atom.canonical()
    if isinstance(c, bool):
        raise ValueError("constant atom")
    catom, pol = c
    a = approximate_catom(catom, ranges, n, eps, mode)
    if pol:
        return AtomApprox(atom, a.over, a.under, a.lower, a.upper)
    return AtomApprox(atom, nnf(Not(a.under)), nnf(Not(a.over)), a.lower, a.upper)


@dataclass
class Augmented:
    """Result of :func:`augment`: ``formula`` is p_o; ``base`` is p in NNF."""

    formula: Formula
    base: Formula
    approximations: List[AtomApprox]

    @property
    def approx_atoms(self) -> set:
        out = set()
        for ap in self.approximations:
            out.update(atoms_of(ap.over))
            out.update(atoms_of(ap.under))
        return out


def augment(p: Formula, ranges: Mapping[str, Tuple], n: int = 1, eps=DEFAULT_EPS,
            mode: str = "overt") -> Augmented:
    """Conjoin ``(a -> over(a)) & (under(a) -> a)`` for every nonlinear atom of p."""
    base = split_equalities(nnf(p))
    missing = sorted({v for a in atoms_of(base) for v in a.variables()} - set(ranges))
    if missing:
        raise ValueError("no range for %s" % ", ".join(missing))
    approx = []
    parts: List[Formula] = [base]
    for a in atoms_of(base):
        if a.is_linear():
            continue
        ap = approximate_catom(a, ranges, n, eps, mode)
        approx.append(ap)
        lit = Lit(a, True)
        parts.append(Implies(lit, ap.over))
        parts.append(Implies(ap.under, lit))
    if len(parts) == 1:
        return Augmented(base, base, [])
    return Augmented(And(tuple(parts)), base, approx)
