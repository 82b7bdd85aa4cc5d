"""Branch-and-prune satisfiability for conjunctions of polynomial constraints.

Linear constraints are handled exactly by the incremental simplex with the
current box asserted as bounds.  Each nonlinear monomial gets an auxiliary
LP column, so nonlinear constraints become linear rows too; per box the
auxiliaries are tied to the box by McCormick envelopes (products), tangent
and secant cuts (squares) and interval bounds (everything else).  This
relaxation prunes jointly, which plain interval evaluation cannot; the
outward-rounded interval test is kept as a cheap first filter.  Candidate points (the LP model, the box centre and
their midpoint) are checked exactly, so a Sat answer always carries a
rational witness.  Every pruned box is recorded in a refutation tree that
:func:`replay_refutation` can re-check independently.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .._rational import Q, frac
from ..poly import Poly
from .interval import CompiledPoly, exact_interval, float_box
from .simplex import Sat, Simplex, Unknown, Unsat, lp_feasible

Constraint = Tuple[Poly, str]  # ``poly rel 0``

DEFAULT_MAX_BOXES = 100000
DEFAULT_MIN_WIDTH = Fraction(1, 2 ** 40)

_REL_OK = {
    "<": lambda v: v < 0, "<=": lambda v: v <= 0, "=": lambda v: v == 0,
    ">=": lambda v: v >= 0, ">": lambda v: v > 0,
}


@dataclass
class IcpStats:
    boxes: int = 0
    lp_prunes: int = 0
    interval_prunes: int = 0
    floor_hits: int = 0


def holds(constraints: Sequence[Constraint], point: Mapping[str, object]) -> bool:
    return all(_REL_OK[rel](p.evaluate(point)) for p, rel in constraints)


class _ExactPoly:
    """Polynomial with engine-typed coefficients over indexed variables."""

    __slots__ = ("terms", "rel")

    def __init__(self, poly: Poly, index, rel):
        self.rel = rel
        self.terms = [(Q(c), [(index[v], e) for v, e in m]) for m, c in poly.terms]

    def ok(self, x) -> bool:
        s = Q(0)
        for c, m in self.terms:
            for i, e in m:
                c = c * x[i] ** e if e > 1 else c * x[i]
            s += c
        return _REL_OK[self.rel](s)


def _monomials(polys) -> List:
    seen = {}
    for p in polys:
        for m, _ in p.terms:
            if sum(e for _, e in m) >= 2 and m not in seen:
                seen[m] = len(seen)
    return list(seen)


def _aux_name(m) -> str:
    return "#" + "*".join("%s^%d" % (v, e) for v, e in m)


def relaxation(monos, box: Mapping[str, Tuple]) -> List[Tuple[Dict[str, Fraction], str, Fraction]]:
    """Linear constraints valid for ``aux_m = m(x)`` whenever ``x`` is in ``box``.

    Returned in :func:`lp_feasible` form over the variable names plus one
    auxiliary name per monomial.
    """
    out = []
    for m in monos:
        a = _aux_name(m)
        lo, hi = exact_interval(Poly({m: 1}), box)
        out.append(({a: Fraction(1)}, ">=", lo))
        out.append(({a: Fraction(1)}, "<=", hi))
        if len(m) == 1 and m[0][1] == 2:
            v = m[0][0]
            l, h = frac(box[v][0]), frac(box[v][1])
            pts = {l, h, (l + h) / 2}
            for c in pts:
                # x^2 >= 2 c x - c^2
                out.append(({a: Fraction(1), v: -2 * c}, ">=", -c * c))
            if l != h:
                out.append(({a: Fraction(1), v: -(l + h)}, "<=", -l * h))
        elif len(m) == 2 and m[0][1] == 1 and m[1][1] == 1:
            x, y = m[0][0], m[1][0]
            xl, xu = frac(box[x][0]), frac(box[x][1])
            yl, yu = frac(box[y][0]), frac(box[y][1])
            out.append(({a: Fraction(1), x: -yl, y: -xl}, ">=", -xl * yl))
            out.append(({a: Fraction(1), x: -yu, y: -xu}, ">=", -xu * yu))
            out.append(({a: Fraction(1), x: -yl, y: -xu}, "<=", -xu * yl))
            out.append(({a: Fraction(1), x: -yu, y: -xl}, "<=", -xl * yu))
    return [({k: c for k, c in co.items() if c != 0}, rel, rhs) for co, rel, rhs in out]


def _lifted(p: Poly) -> Tuple[Dict[str, Fraction], Fraction]:
    """``p`` as a linear form over variables and monomial auxiliaries."""
    co: Dict[str, Fraction] = {}
    const = Fraction(0)
    for m, c in p.terms:
        d = sum(e for _, e in m)
        if d == 0:
            const += c
        elif d == 1:
            co[m[0][0]] = co.get(m[0][0], Fraction(0)) + c
        else:
            co[_aux_name(m)] = c
    return co, const


def _refuted_by_interval(rel, lo, hi) -> bool:
    if rel == "<":
        return lo >= 0
    if rel == "<=":
        return lo > 0
    if rel == ">":
        return hi <= 0
    if rel == ">=":
        return hi < 0
    return lo > 0 or hi < 0


def _certain(rel, lo, hi) -> bool:
    if rel == "<":
        return hi < 0
    if rel == "<=":
        return hi <= 0
    if rel == ">":
        return lo > 0
    if rel == ">=":
        return lo >= 0
    return lo == hi == 0


def icp_check(constraints: Sequence[Constraint], box: Mapping[str, Tuple], *,
              max_boxes: int = DEFAULT_MAX_BOXES, min_width: Fraction = DEFAULT_MIN_WIDTH,
              deadline: Optional[float] = None, record: bool = False, stats: Optional[IcpStats] = None):
    """Decide ``AND constraints`` over ``box``.

    Returns Sat(witness), Unsat(tree) or Unknown(reason).  ``tree`` is None
    unless ``record`` is set.
    """
    stats = stats if stats is not None else IcpStats()
    names = sorted(box)
    for p, rel in constraints:
        if rel not in _REL_OK:
            raise ValueError("unsupported relation %r" % rel)
        extra = p.variables() - set(names)
        if extra:
            raise KeyError("constraint variables %s are not in the box" % sorted(extra))
    index = {v: i for i, v in enumerate(names)}
    linear = []
    nonlinear = []
    nonlinear_p = []
    for p, rel in constraints:
        if p.is_constant():
            if not _REL_OK[rel](p.constant()):
                return Unsat(("const",) if record else None)
            continue
        if p.degree() <= 1:
            linear.append((p, rel))
        else:
            nonlinear.append((CompiledPoly(p, names), rel))
            nonlinear_p.append((p, rel))

    monos = _monomials([p for p, _ in nonlinear_p])
    cols = names + [_aux_name(m) for m in monos]
    cindex = {v: i for i, v in enumerate(cols)}
    sx = Simplex(len(cols))
    for t, (p, rel) in enumerate(linear + nonlinear_p):
        co, const = _lifted(p)
        if sx.assert_constraint({cindex[v]: Q(a) for v, a in co.items()}, rel, Q(-const), t) is not None:
            return Unsat(("lp", _rbox(box, names)) if record else None)
    if sx.check() is not None:
        return Unsat(("lp", _rbox(box, names)) if record else None)
    exact = [_ExactPoly(p, index, rel) for p, rel in constraints if not p.is_constant()]

    width0 = [frac(box[v][1]) - frac(box[v][0]) for v in names]
    root: List = []
    # breadth-first: shallow boxes first keeps the search from sinking into one corner
    stack = deque([({v: (frac(box[v][0]), frac(box[v][1])) for v in names}, root)])
    unknown_reason = None
    while stack:
        b, slot = stack.popleft()
        stats.boxes += 1
        if stats.boxes > max_boxes:
            return Unknown("box budget exhausted")
        if deadline is not None and stats.boxes % 16 == 0 and time.monotonic() > deadline:
            return Unknown("timeout")
        # nonlinear part: cheap interval test first
        flo, fhi = float_box(b, names)
        refuted = False
        all_certain = True
        for cp, rel in nonlinear:
            lo, hi = cp.enclose(flo, fhi)
            if _refuted_by_interval(rel, lo, hi):
                refuted = True
                break
            if not _certain(rel, lo, hi):
                all_certain = False
        if refuted:
            stats.interval_prunes += 1
            if record:
                slot.append(("interval", _rbox(b, names)))
            continue
        # exact LP over the box with the relaxation of every monomial
        sx.push()
        conflict = None
        for i, v in enumerate(names):
            lo, hi = b[v]
            conflict = sx.assert_lower(i, Q(lo), 0, ("box", v)) or sx.assert_upper(i, Q(hi), 0, ("box", v))
            if conflict:
                break
        if conflict is None and not all_certain:
            for co, rel, rhs in relaxation(monos, b):
                conflict = sx.assert_constraint({cindex[v]: Q(a) for v, a in co.items()}, rel, Q(rhs), "relax")
                if conflict:
                    break
        if conflict is None:
            conflict = sx.check()
        lp_point = None
        if conflict is None:
            m = sx.model()
            lp_point = [m[i] for i in range(len(names))]
        sx.pop()
        if conflict is not None:
            stats.lp_prunes += 1
            if record:
                slot.append(("lp", _rbox(b, names)))
            continue
        # candidate witnesses
        centre = [Q(b[v][0] + b[v][1]) / 2 for v in names]
        if all_certain:
            cands = [lp_point]
        else:
            cands = [centre, lp_point, [(c + p) / 2 for c, p in zip(centre, lp_point)]]
        for c in cands:
            if all(e.ok(c) for e in exact):
                return Sat({v: frac(c[i]) for i, v in enumerate(names)})
        # bisect the widest normalised dimension
        best, bw = None, Fraction(-1)
        for i, v in enumerate(names):
            if width0[i] == 0:
                continue
            w = (b[v][1] - b[v][0]) / width0[i]
            if w > bw:
                best, bw = v, w
        if best is None or bw <= min_width:
            stats.floor_hits += 1
            unknown_reason = "box size floor reached"
            if record:
                slot.append(("floor", _rbox(b, names)))
            continue
        lo, hi = b[best]
        mid = (lo + hi) / 2
        left = dict(b)
        left[best] = (lo, mid)
        right = dict(b)
        right[best] = (mid, hi)
        children: List = []
        if record:
            slot.append(("split", _rbox(b, names), best, mid, children))
        stack.append((left, children))
        stack.append((right, children))
    if unknown_reason:
        return Unknown(unknown_reason)
    return Unsat(("tree", root) if record else None)


def _rbox(b, names):
    return tuple((v, frac(b[v][0]), frac(b[v][1])) for v in names)


def replay_refutation(constraints: Sequence[Constraint], certificate) -> bool:
    """Independently re-check an Unsat certificate from :func:`icp_check`.

    Interval leaves are re-evaluated in exact rational interval arithmetic
    (or, where that is too coarse, with the same outward-rounded float
    evaluation); LP leaves are re-solved; split nodes must tile their box.
    """
    nonlinear = [(p, r) for p, r in constraints if p.degree() > 1]
    monos = _monomials([p for p, _ in nonlinear])

    def lp_leaf(rbox):
        cons = []
        for p, rel in constraints:
            co, const = _lifted(p)
            cons.append((co, rel, -const))
        box = {v: (lo, hi) for v, lo, hi in rbox}
        for v, lo, hi in rbox:
            cons.append(({v: 1}, ">=", lo))
            cons.append(({v: 1}, "<=", hi))
        cons.extend(relaxation(monos, box))
        names = [v for v, _, _ in rbox] + [_aux_name(m) for m in monos]
        return not lp_feasible(cons, names)

    def interval_leaf(rbox):
        box = {v: (lo, hi) for v, lo, hi in rbox}
        names = [v for v, _, _ in rbox]
        flo, fhi = float_box(box, names)
        for p, rel in nonlinear:
            lo, hi = exact_interval(p, box)
            if _refuted_by_interval(rel, lo, hi):
                return True
            flo_, fhi_ = CompiledPoly(p, names).enclose(flo, fhi)
            if _refuted_by_interval(rel, flo_, fhi_):
                return True
        return False

    def node_ok(node):
        kind = node[0]
        if kind == "lp":
            return lp_leaf(node[1])
        if kind == "interval":
            return interval_leaf(node[1])
        if kind == "split":
            _, rbox, v, mid, children = node
            if len(children) != 2:
                return False
            lo_child = {x: (a, b) for x, a, b in children[0][1]}
            hi_child = {x: (a, b) for x, a, b in children[1][1]}
            for x, a, b in rbox:
                if x == v:
                    if lo_child[x] != (a, mid) or hi_child[x] != (mid, b):
                        return False
                elif lo_child[x] != (a, b) or hi_child[x] != (a, b):
                    return False
            return all(node_ok(c) for c in children)
        return False

    if certificate is None:
        return False
    if certificate[0] == "const":
        return any(p.is_constant() and not _REL_OK[r](p.constant()) for p, r in constraints)
    if certificate[0] == "lp":
        return lp_leaf(certificate[1])
    if certificate[0] == "tree":
        return all(node_ok(n) for n in certificate[1])
    return False
