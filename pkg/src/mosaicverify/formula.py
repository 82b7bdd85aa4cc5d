"""Quantifier-free polynomial real-arithmetic formulas.

Atoms compare a polynomial against zero.  For propositional reasoning every
atom is mapped to a *canonical* atom ``t < 0``, ``t <= 0`` or ``t = 0`` with a
positive, unit leading coefficient plus a polarity, so syntactically
different spellings of the same constraint share one skeleton literal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .poly import Poly

RELATIONS = ("<", "<=", "=", "!=", ">=", ">")
CANONICAL_RELATIONS = ("<", "<=", "=")


class Formula:
    """Base class of the formula AST (all nodes are immutable)."""

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class CAtom:
    """Canonical atom ``term rel 0`` with rel in ``<, <=, =``."""

    term: Poly
    rel: str

    def holds(self, state) -> bool:
        v = self.term.evaluate(state)
        if self.rel == "<":
            return v < 0
        if self.rel == "<=":
            return v <= 0
        return v == 0

    def is_linear(self) -> bool:
        return self.term.degree() <= 1

    def variables(self) -> frozenset:
        return self.term.variables()

    def to_text(self) -> str:
        return "%s %s 0" % (self.term.to_text(), self.rel)

    def __repr__(self):
        return "CAtom(%s)" % self.to_text()


@dataclass(frozen=True)
class Atom(Formula):
    """User-level atom ``lhs rel 0``; ``lhs`` already holds ``left - right``."""

    lhs: Poly
    rel: str

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError("unknown relation %r" % self.rel)

    def holds(self, state) -> bool:
        v = self.lhs.evaluate(state)
        return {
            "<": v < 0, "<=": v <= 0, "=": v == 0,
            "!=": v != 0, ">=": v >= 0, ">": v > 0,
        }[self.rel]

    def canonical(self):
        """Return ``(CAtom, polarity)`` or a boolean for constant atoms."""
        return canonicalize(self.lhs, self.rel)

    def variables(self) -> frozenset:
        return self.lhs.variables()


@dataclass(frozen=True)
class ArgmaxIs(Formula):
    """``argmax_out = index`` (1-based); ties satisfy every maximal index."""

    index: int
    outputs: Tuple[str, ...]

    def __post_init__(self):
        if not 1 <= self.index <= len(self.outputs):
            raise ValueError("argmax index %d out of range 1..%d" % (self.index, len(self.outputs)))

    def expand(self) -> Formula:
        me = Poly.var(self.outputs[self.index - 1])
        parts = [Atom(me - Poly.var(o), ">=")
                 for j, o in enumerate(self.outputs) if j != self.index - 1]
        if not parts:
            return TRUE
        return And(tuple(parts))


@dataclass(frozen=True)
class Lit(Formula):
    """Signed canonical atom; only produced by :func:`nnf`."""

    atom: CAtom
    positive: bool = True

    def holds(self, state) -> bool:
        return self.atom.holds(state) == self.positive

    def negate(self) -> "Lit":
        return Lit(self.atom, not self.positive)


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: Tuple[Formula, ...]

    def __init__(self, args: Iterable[Formula]):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or(Formula):
    args: Tuple[Formula, ...]

    def __init__(self, args: Iterable[Formula]):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


def conj(parts: Iterable[Formula]) -> Formula:
    """And with constant folding and flattening."""
    out: List[Formula] = []
    for p in parts:
        if isinstance(p, Const):
            if not p.value:
                return FALSE
            continue
        if isinstance(p, And):
            out.extend(p.args)
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(parts: Iterable[Formula]) -> Formula:
    """Or with constant folding and flattening."""
    out: List[Formula] = []
    for p in parts:
        if isinstance(p, Const):
            if p.value:
                return TRUE
            continue
        if isinstance(p, Or):
            out.extend(p.args)
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


# ---------------------------------------------------------------------------
# canonical atoms

_FLIP = {"<": ">", "<=": ">=", "=": "=", "!=": "!=", ">=": "<=", ">": "<"}


def canonicalize(term: Poly, rel: str):
    """Map ``term rel 0`` to ``(CAtom, polarity)``; constant atoms give a bool."""
    if term.is_constant():
        v = term.constant()
        return {"<": v < 0, "<=": v <= 0, "=": v == 0,
                "!=": v != 0, ">=": v >= 0, ">": v > 0}[rel]
    lead = term.leading_coeff()
    if lead < 0:
        term = -term
        rel = _FLIP[rel]
        lead = -lead
    if lead != 1:
        term = term.scale(Fraction(1) / lead)
    if rel in CANONICAL_RELATIONS:
        return CAtom(term, rel), True
    # negated forms: t > 0 == not(t <= 0), t >= 0 == not(t < 0), t != 0 == not(t = 0)
    return CAtom(term, {">": "<=", ">=": "<", "!=": "="}[rel]), False


def lit_of(term: Poly, rel: str) -> Formula:
    """Canonical literal (or constant) for ``term rel 0``."""
    c = canonicalize(term, rel)
    if isinstance(c, bool):
        return Const(c)
    return Lit(c[0], c[1])


# ---------------------------------------------------------------------------
# traversal

def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form over canonical literals; ArgmaxIs is expanded."""
    if isinstance(f, Const):
        return Const(f.value == positive)
    if isinstance(f, Atom):
        c = f.canonical()
        if isinstance(c, bool):
            return Const(c == positive)
        a, pol = c
        return Lit(a, pol == positive)
    if isinstance(f, Lit):
        return f if positive else f.negate()
    if isinstance(f, ArgmaxIs):
        return nnf(f.expand(), positive)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return conj(parts) if positive else disj(parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return disj(parts) if positive else conj(parts)
    if isinstance(f, Implies):
        if positive:
            return disj([nnf(f.lhs, False), nnf(f.rhs, True)])
        return conj([nnf(f.lhs, True), nnf(f.rhs, False)])
    if isinstance(f, Iff):
        a, b = f.lhs, f.rhs
        if positive:
            return disj([conj([nnf(a), nnf(b)]), conj([nnf(a, False), nnf(b, False)])])
        return disj([conj([nnf(a), nnf(b, False)]), conj([nnf(a, False), nnf(b)])])
    raise TypeError("not a formula: %r" % (f,))


def split_equalities(f: Formula) -> Formula:
    """Rewrite ``t = 0`` literals into ``t <= 0`` / ``t < 0`` literals (input in NNF)."""
    if isinstance(f, Lit):
        if f.atom.rel != "=":
            return f
        le = Lit(CAtom(f.atom.term, "<="), True)
        lt = Lit(CAtom(f.atom.term, "<"), True)
        if f.positive:
            return conj([le, lt.negate()])
        return disj([le.negate(), lt])
    if isinstance(f, And):
        return conj(split_equalities(a) for a in f.args)
    if isinstance(f, Or):
        return disj(split_equalities(a) for a in f.args)
    return f


def evaluate(f: Formula, state: Mapping[str, object]) -> bool:
    """Exact evaluation; raises KeyError on a missing assignment."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, (Atom, Lit)):
        return f.holds(state)
    if isinstance(f, ArgmaxIs):
        vals = [state[o] for o in f.outputs]
        me = vals[f.index - 1]
        return all(me >= v for v in vals)
    if isinstance(f, Not):
        return not evaluate(f.arg, state)
    if isinstance(f, And):
        return all(evaluate(a, state) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, state) for a in f.args)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, state)) or evaluate(f.rhs, state)
    if isinstance(f, Iff):
        return evaluate(f.lhs, state) == evaluate(f.rhs, state)
    raise TypeError("not a formula: %r" % (f,))


def kleene(f: Formula, assignment: Mapping[CAtom, bool]) -> Optional[bool]:
    """Three-valued evaluation of an NNF formula under a partial atom assignment."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Lit):
        v = assignment.get(f.atom)
        if v is None:
            return None
        return v == f.positive
    if isinstance(f, And):
        unknown = False
        for a in f.args:
            r = kleene(a, assignment)
            if r is False:
                return False
            if r is None:
                unknown = True
        return None if unknown else True
    if isinstance(f, Or):
        unknown = False
        for a in f.args:
            r = kleene(a, assignment)
            if r is True:
                return True
            if r is None:
                unknown = True
        return None if unknown else False
    raise TypeError("kleene() expects NNF, got %r" % (f,))


def atoms_of(f: Formula) -> List[CAtom]:
    """Canonical atoms in first-occurrence order (deterministic, deduplicated)."""
    seen: Dict[CAtom, None] = {}

    def walk(g):
        if isinstance(g, Lit):
            seen.setdefault(g.atom, None)
        elif isinstance(g, (Atom, ArgmaxIs, Not, Implies, Iff)):
            walk(nnf(g))
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)

    walk(f)
    return list(seen)


def vars_of(f: Formula) -> List[str]:
    """Free variables, sorted."""
    out = set()

    def walk(g):
        if isinstance(g, (Atom,)):
            out.update(g.lhs.variables())
        elif isinstance(g, Lit):
            out.update(g.atom.term.variables())
        elif isinstance(g, ArgmaxIs):
            out.update(g.outputs)
        elif isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)
        elif isinstance(g, (Implies, Iff)):
            walk(g.lhs)
            walk(g.rhs)

    walk(f)
    return sorted(out)


def substitute(f: Formula, mapping: Mapping[str, Poly]) -> Formula:
    """Replace variables by polynomials (ArgmaxIs is expanded first)."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return Atom(f.lhs.substitute(mapping), f.rel)
    if isinstance(f, Lit):
        return _neg_if(lit_of(f.atom.term.substitute(mapping), f.atom.rel), not f.positive)
    if isinstance(f, ArgmaxIs):
        return substitute(f.expand(), mapping)
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    if isinstance(f, And):
        return And(substitute(a, mapping) for a in f.args)
    if isinstance(f, Or):
        return Or(substitute(a, mapping) for a in f.args)
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, mapping), substitute(f.rhs, mapping))
    if isinstance(f, Iff):
        return Iff(substitute(f.lhs, mapping), substitute(f.rhs, mapping))
    raise TypeError(f)


def _neg_if(f: Formula, neg: bool) -> Formula:
    if not neg:
        return f
    if isinstance(f, Const):
        return Const(not f.value)
    return f.negate()


# ---------------------------------------------------------------------------
# classification

LINEAR_INPUT = "linear-input"
LINEAR_OUTPUT = "linear-mixed"
NONLINEAR_INPUT = "nonlinear-input"
NONLINEAR_OUTPUT = "nonlinear-mixed"


@dataclass(frozen=True)
class AtomKind:
    linear: bool
    input_only: bool

    @property
    def label(self) -> str:
        return ("linear" if self.linear else "nonlinear") + "/" + (
            "input-only" if self.input_only else "mixed-or-output")


def atom_kind(atom, inputs: Iterable[str]) -> AtomKind:
    term = atom.term if isinstance(atom, CAtom) else atom.lhs
    inputs = set(inputs)
    return AtomKind(term.degree() <= 1, term.variables() <= inputs)


def classify_atoms(f: Formula, inputs: Sequence[str]) -> Dict[CAtom, AtomKind]:
    """Kind of every canonical atom of ``f``."""
    return {a: atom_kind(a, inputs) for a in atoms_of(f)}


# ---------------------------------------------------------------------------
# boolean skeleton

@dataclass
class Skeleton:
    """Propositional abstraction: atoms are numbered 1..n in first-occurrence order.

    ``prop`` is a nested tuple: ``("and", [...])``, ``("or", [...])``,
    ``("lit", k)`` with signed ``k``, or ``("const", bool)``.
    """

    prop: tuple
    atom_to_var: Dict[CAtom, int] = field(default_factory=dict)
    var_to_atom: Dict[int, CAtom] = field(default_factory=dict)

    def evaluate(self, values: Mapping[int, bool]) -> bool:
        def ev(p):
            tag = p[0]
            if tag == "const":
                return p[1]
            if tag == "lit":
                v = values[abs(p[1])]
                return v if p[1] > 0 else not v
            if tag == "and":
                return all(ev(c) for c in p[1])
            return any(ev(c) for c in p[1])
        return ev(self.prop)


def skeleton(f: Formula) -> Skeleton:
    """Boolean skeleton of an NNF formula (non-NNF input is converted first)."""
    if not _is_nnf(f):
        f = nnf(f)
    sk = Skeleton(prop=("const", True))

    def var(a: CAtom) -> int:
        k = sk.atom_to_var.get(a)
        if k is None:
            k = len(sk.atom_to_var) + 1
            sk.atom_to_var[a] = k
            sk.var_to_atom[k] = a
        return k

    def walk(g):
        if isinstance(g, Const):
            return ("const", g.value)
        if isinstance(g, Lit):
            k = var(g.atom)
            return ("lit", k if g.positive else -k)
        if isinstance(g, And):
            return ("and", [walk(a) for a in g.args])
        if isinstance(g, Or):
            return ("or", [walk(a) for a in g.args])
        raise TypeError(g)

    sk.prop = walk(f)
    return sk


def _is_nnf(f: Formula) -> bool:
    if isinstance(f, (Const, Lit)):
        return True
    if isinstance(f, (And, Or)):
        return all(_is_nnf(a) for a in f.args)
    return False


# ---------------------------------------------------------------------------
# printing

_PREC = {"iff": 1, "implies": 2, "or": 3, "and": 4, "not": 5, "atom": 6}


def to_text(f: Formula) -> str:
    """Render in the query-file expression syntax."""
    return _pp(f)[0]


def _pp(f: Formula):
    if isinstance(f, Const):
        # constants are written as trivially true/false comparisons
        return ("0 <= 0" if f.value else "0 < 0"), _PREC["atom"]
    if isinstance(f, Atom):
        return "%s %s 0" % (f.lhs.to_text(), f.rel), _PREC["atom"]
    if isinstance(f, Lit):
        s = "%s %s 0" % (f.atom.term.to_text(), f.atom.rel)
        if f.positive:
            return s, _PREC["atom"]
        return "!(%s)" % s, _PREC["not"]
    if isinstance(f, ArgmaxIs):
        return "argmax_out = %d" % f.index, _PREC["atom"]
    if isinstance(f, Not):
        s, p = _pp(f.arg)
        return "!" + (s if p >= _PREC["not"] else "(%s)" % s), _PREC["not"]
    if isinstance(f, (And, Or)):
        op, key = ((" & ", "and") if isinstance(f, And) else (" | ", "or"))
        if not f.args:
            return _pp(Const(isinstance(f, And)))
        parts = []
        for a in f.args:
            s, p = _pp(a)
            parts.append(s if p > _PREC[key] else "(%s)" % s)
        return op.join(parts), _PREC[key]
    if isinstance(f, Implies):
        ls, lp = _pp(f.lhs)
        rs, rp = _pp(f.rhs)
        ls = ls if lp > _PREC["implies"] else "(%s)" % ls
        rs = rs if rp >= _PREC["implies"] else "(%s)" % rs
        return "%s -> %s" % (ls, rs), _PREC["implies"]
    if isinstance(f, Iff):
        ls, lp = _pp(f.lhs)
        rs, rp = _pp(f.rhs)
        ls = ls if lp >= _PREC["iff"] else "(%s)" % ls
        rs = rs if rp > _PREC["iff"] else "(%s)" % rs
        return "%s <-> %s" % (ls, rs), _PREC["iff"]
    raise TypeError(f)


# ---------------------------------------------------------------------------
# query specification

@dataclass(frozen=True)
class QuerySpec:
    """Parsed query file: formula plus declared input/output variables and ranges."""

    formula: Formula
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    ranges: Dict[str, Tuple[Fraction, Fraction]]
    mode: str = "falsify"

    def __post_init__(self):
        if set(self.inputs) & set(self.outputs):
            raise ValueError("input and output variables overlap")
        if self.mode not in ("falsify", "prove"):
            raise ValueError("mode must be falsify or prove")
        for v in tuple(self.inputs) + tuple(self.outputs):
            if v not in self.ranges:
                raise ValueError("missing range for %s" % v)
            lo, hi = self.ranges[v]
            if lo > hi:
                raise ValueError("empty range for %s" % v)
        free = set(vars_of(self.formula))
        extra = free - set(self.inputs) - set(self.outputs)
        if extra:
            raise ValueError("undeclared variables: %s" % ", ".join(sorted(extra)))

    def __hash__(self):
        return hash((self.formula, self.inputs, self.outputs, self.mode))

    def target(self) -> Formula:
        """Formula whose satisfying states are counterexamples."""
        return Not(self.formula) if self.mode == "prove" else self.formula

    def with_mode(self, mode: str) -> "QuerySpec":
        return QuerySpec(self.formula, self.inputs, self.outputs, self.ranges, mode)

    def with_ranges(self, ranges) -> "QuerySpec":
        return QuerySpec(self.formula, self.inputs, self.outputs, dict(ranges), self.mode)

    def variables(self) -> Tuple[str, ...]:
        return tuple(self.inputs) + tuple(self.outputs)

    def in_ranges(self, state) -> bool:
        return all(self.ranges[v][0] <= state[v] <= self.ranges[v][1] for v in self.variables())
