"""Decomposition of an augmented query into azulejos.

An azulejo fixes the sign of every linear input-only atom.  Distinct
azulejos therefore disagree on at least one atom and are pairwise disjoint.
For each azulejo we collect

* ``output_dnf``: conjunctions of linear atoms that mention outputs, and
* ``nonlinear_dnf``: conjunctions that additionally fix nonlinear atoms,

by enumerating models of the propositional skeleton under assumptions,
shrinking them with three-valued evaluation, and discarding combinations
that the LP or ICP back-end refutes.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from ._rational import fmt, frac
from .formula import (And, CAtom, Const, Formula, Lit, Or, QuerySpec, atom_kind, atoms_of,
                      kleene, nnf, split_equalities, to_text)
from .poly import Poly
from .satcore import ClauseDb
from .theory.icp import icp_check
from .theory.simplex import Simplex, Unknown, lp_feasible

LI, LO, NL = "linear-input", "linear-output", "nonlinear"


def lit_constraint(lit: Lit) -> Tuple[Dict[str, Fraction], str, Fraction]:
    """Linear literal as ``(coeffs, rel, rhs)``."""
    t = lit.atom.term
    rel = lit.atom.rel
    if not lit.positive:
        rel = {"<=": ">", "<": ">=", "=": "!="}[rel]
    if rel == "!=":
        raise ValueError("disequalities are not linear constraints")
    return dict(t.linear_coeffs()), rel, -t.constant()


def lit_poly_constraint(lit: Lit) -> Tuple[Poly, str]:
    """Literal as ``(poly, rel)`` meaning ``poly rel 0``."""
    rel = lit.atom.rel
    if not lit.positive:
        rel = {"<=": ">", "<": ">="}[rel]
    return lit.atom.term, rel


def range_constraints(ranges: Mapping[str, Tuple], names: Sequence[str]):
    out = []
    for v in names:
        lo, hi = ranges[v]
        out.append(({v: 1}, ">=", frac(lo)))
        out.append(({v: 1}, "<=", frac(hi)))
    return out


def lit_text(l: Lit) -> str:
    s = "%s %s 0" % (l.atom.term.to_text(), l.atom.rel)
    return s if l.positive else "!(%s)" % s


@dataclass(frozen=True)
class NormalizedQuery:
    """One azulejo with its linear output DNF and nonlinear DNF.

    An empty conjunction inside a DNF stands for ``true``.
    """

    index: int
    azulejo: Tuple[Lit, ...]
    output_dnf: Tuple[Tuple[Lit, ...], ...]
    nonlinear_dnf: Tuple[Tuple[Lit, ...], ...]
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]

    def input_system(self):
        """Azulejo as ``(coeffs, rel, rhs)`` constraints over the inputs."""
        return [lit_constraint(l) for l in self.azulejo]

    def q_l(self) -> Formula:
        return And((And(self.azulejo), Or(tuple(And(c) for c in self.output_dnf))))

    def q_n(self) -> Formula:
        return Or(tuple(And(c) for c in self.nonlinear_dnf))

    def holds(self, state) -> bool:
        """Exact membership in ``q_l & q_n``."""
        if not all(l.holds(state) for l in self.azulejo):
            return False
        if not any(all(l.holds(state) for l in c) for c in self.output_dnf):
            return False
        return any(all(l.holds(state) for l in c) for c in self.nonlinear_dnf)

    def to_json(self) -> dict:
        def row(l):
            coeffs, rel, rhs = lit_constraint(l)
            return {"coeffs": {v: fmt(a) for v, a in sorted(coeffs.items())}, "rel": rel, "rhs": fmt(rhs)}

        return {
            "index": self.index,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "azulejo": [row(l) for l in self.azulejo],
            "azulejo_text": [lit_text(l) for l in self.azulejo],
            "output_dnf": [[lit_text(l) for l in c] for c in self.output_dnf],
            "nonlinear_dnf": [[lit_text(l) for l in c] for c in self.nonlinear_dnf],
        }


@dataclass
class MosaicStats:
    azulejos: int = 0
    queries: int = 0
    sat_calls: int = 0
    lp_calls: int = 0
    icp_calls: int = 0
    cache_hits: int = 0
    icp_unknown: int = 0
    seconds: float = 0.0


# ---------------------------------------------------------------------------
# skeleton encoding

class _Encoder:
    """Plaisted-Greenbaum CNF of an NNF formula; atoms get the lowest indices."""

    def __init__(self, f: Formula, atoms: Sequence[CAtom]):
        self.var = {a: i + 1 for i, a in enumerate(atoms)}
        self.atom_of = {i + 1: a for i, a in enumerate(atoms)}
        self.next = len(atoms) + 1
        self.clauses: List[List[int]] = []
        self.memo: Dict[int, int] = {}
        if isinstance(f, Const):
            if not f.value:
                self.clauses.append([])
        else:
            self.clauses.append([self.enc(f)])

    def enc(self, g) -> int:
        if isinstance(g, Lit):
            v = self.var[g.atom]
            return v if g.positive else -v
        key = id(g)
        if key in self.memo:
            return self.memo[key]
        kids = [self.enc(c) for c in g.args]
        x = self.next
        self.next += 1
        if isinstance(g, And):
            for k in kids:
                self.clauses.append([-x, k])
        else:
            self.clauses.append([-x] + kids)
        self.memo[key] = x
        return x


def linear_dependencies(atoms: Sequence[CAtom]) -> List[Tuple[int, int]]:
    """Entailments ``(i, j)`` meaning atom i implies atom j.

    Two linear atoms over the same coefficient row ``u = row . x`` compare
    ``u`` against constants, so one may entail the other.
    """
    groups: Dict[tuple, List[int]] = {}
    for i, a in enumerate(atoms):
        if not a.is_linear() or a.rel == "=":
            continue
        row = tuple(sorted(a.term.linear_coeffs().items()))
        groups.setdefault(row, []).append(i)
    out = []
    for idx in groups.values():
        for i in idx:
            for j in idx:
                if i == j:
                    continue
                a, b = atoms[i], atoms[j]
                ca, cb = -a.term.constant(), -b.term.constant()
                if ca < cb or (ca == cb and (a.rel == "<" or b.rel == "<=")):
                    out.append((i, j))
    return out


def dependency_clauses(atoms: Sequence[CAtom], var: Mapping[CAtom, int]) -> List[List[int]]:
    return [[-var[atoms[i]], var[atoms[j]]] for i, j in linear_dependencies(atoms)]


# ---------------------------------------------------------------------------

class Decomposer:
    """Stateful azulejo enumeration; iterate :meth:`run` for the query stream."""

    def __init__(self, p_o: Formula, spec: QuerySpec, *, use_cache: bool = True,
                 icp_timeout: float = 1.0, icp_max_boxes: int = 5000):
        self.spec = spec
        self.f = split_equalities(nnf(p_o))
        self.inputs = tuple(spec.inputs)
        self.outputs = tuple(spec.outputs)
        self.variables = self.inputs + self.outputs
        self.atoms = atoms_of(self.f)
        self.kind: Dict[CAtom, str] = {}
        for a in self.atoms:
            k = atom_kind(a, self.inputs)
            self.kind[a] = NL if not k.linear else (LI if k.input_only else LO)
        self.enc = _Encoder(self.f, self.atoms)
        self.db = ClauseDb(self.enc.clauses)
        for c in dependency_clauses(self.atoms, self.enc.var):
            self.db.add_clause(c)
        self.db.nvars = max(self.db.nvars, self.enc.next - 1)
        self.li_vars = [self.enc.var[a] for a in self.atoms if self.kind[a] == LI]
        self.lo_vars = [self.enc.var[a] for a in self.atoms if self.kind[a] == LO]
        self.nl_vars = [self.enc.var[a] for a in self.atoms if self.kind[a] == NL]
        self.use_cache = use_cache
        self.cache: Dict[tuple, bool] = {}
        self.icp_timeout = icp_timeout
        self.icp_max_boxes = icp_max_boxes
        self.stats = MosaicStats()
        self.ranges = {v: (frac(spec.ranges[v][0]), frac(spec.ranges[v][1])) for v in self.variables}
        self._in_ranges = range_constraints(self.ranges, self.inputs)
        self._all_ranges = range_constraints(self.ranges, self.variables)

    # literals ---------------------------------------------------------------
    def lit(self, v: int) -> Lit:
        return Lit(self.enc.atom_of[abs(v)], v > 0)

    # theory -------------------------------------------------------------------
    def _lp(self, lits: Sequence[int], with_outputs: bool):
        """LP check; returns None when sat, else a conflict subset of ``lits``."""
        key = ("lp",) + tuple(sorted(lits))
        if self.use_cache and key in self.cache:
            self.stats.cache_hits += 1
            return self.cache[key]
        self.stats.lp_calls += 1
        cons = [lit_constraint(self.lit(l)) for l in lits]
        base = self._all_ranges if with_outputs else self._in_ranges
        r = lp_feasible(cons + base, self.variables if with_outputs else self.inputs)
        res = None
        if not r:
            core = [lits[i] for i in r.core if i < len(lits)]
            res = core
        if self.use_cache:
            self.cache[key] = res
        return res

    def _icp(self, lits: Sequence[int]):
        """Nonlinear check; returns 'sat', 'unsat' or 'unknown'."""
        key = ("icp",) + tuple(sorted(lits))
        if self.use_cache and key in self.cache:
            self.stats.cache_hits += 1
            return self.cache[key]
        self.stats.icp_calls += 1
        cons = [lit_poly_constraint(self.lit(l)) for l in lits]
        r = icp_check(cons, self.ranges, max_boxes=self.icp_max_boxes,
                      deadline=time.monotonic() + self.icp_timeout)
        if isinstance(r, Unknown):
            self.stats.icp_unknown += 1
            res = "unknown"
        else:
            res = "sat" if r else "unsat"
        if self.use_cache:
            self.cache[key] = res
        return res

    # minimisation ---------------------------------------------------------------
    def _shrink(self, model: Mapping[int, bool], keep: Sequence[int], droppable: Sequence[int]):
        """Greedily drop atoms (in index order) while the formula stays true."""
        assign = {self.enc.atom_of[abs(v)]: model[abs(v)] for v in list(keep) + list(droppable)}
        if kleene(self.f, assign) is not True:
            return None
        kept = []
        for v in sorted(droppable):
            a = self.enc.atom_of[v]
            val = assign.pop(a)
            if kleene(self.f, assign) is not True:
                assign[a] = val
                kept.append(v if val else -v)
        return kept

    # main loop --------------------------------------------------------------------
    def run(self) -> Iterator[NormalizedQuery]:
        t0 = time.monotonic()
        db = self.db
        try:
            while True:
                self.stats.sat_calls += 1
                r = db.solve()
                if not r.sat:
                    return
                i_lits = [v if r.model[v] else -v for v in self.li_vars]
                conflict = self._lp(i_lits, with_outputs=False) if i_lits else None
                if conflict is not None:
                    db.add_clause([-l for l in conflict])
                    continue
                self.stats.azulejos += 1
                q = self._azulejo(i_lits)
                if i_lits:
                    db.add_clause([-l for l in i_lits])
                else:
                    db.add_clause([])
                if q is not None:
                    self.stats.queries += 1
                    self.stats.seconds = time.monotonic() - t0
                    yield q
        finally:
            self.stats.seconds = time.monotonic() - t0

    def _azulejo(self, i_lits: List[int]) -> Optional[NormalizedQuery]:
        db = self.db
        outputs: List[Tuple[int, ...]] = []
        terms: List[Tuple[int, ...]] = []
        seen_terms = set()
        while True:
            self.stats.sat_calls += 1
            ra = db.solve(i_lits)
            if not ra.sat:
                break
            o = self._shrink(ra.model, i_lits, self.lo_vars + self.nl_vars)
            o = [l for l in o if abs(l) in set(self.lo_vars)]
            if o:
                conflict = self._lp(i_lits + o, with_outputs=True)
                if conflict is not None:
                    db.add_clause([-l for l in conflict] or [])
                    if not conflict:
                        return None
                    continue
            found = False
            while True:
                self.stats.sat_calls += 1
                rb = db.solve(i_lits + o)
                if not rb.sat:
                    break
                rest = [v for v in self.lo_vars if v not in {abs(l) for l in o}] + self.nl_vars
                extra = self._shrink(rb.model, i_lits + o, rest)
                term = tuple(sorted(o + extra, key=abs))
                has_nl = any(abs(l) in set(self.nl_vars) for l in term)
                if has_nl:
                    status = self._icp(i_lits + list(term))
                else:
                    status = "sat" if self._lp(i_lits + list(term), with_outputs=True) is None else "unsat"
                if status != "unsat":
                    found = True
                    if term not in seen_terms:
                        seen_terms.add(term)
                        terms.append(term)
                block = [-l for l in i_lits + list(term)]
                if not block:
                    db.add_clause([])
                    break
                db.add_clause(block)
            if found:
                outputs.append(tuple(o))
            block = [-l for l in i_lits + o]
            if not block:
                break
            db.add_clause(block)
        if not outputs:
            return None
        lit = self.lit
        return NormalizedQuery(
            index=self.stats.queries,
            azulejo=tuple(lit(l) for l in i_lits),
            output_dnf=tuple(tuple(lit(l) for l in o) for o in outputs),
            nonlinear_dnf=tuple(tuple(lit(l) for l in t) for t in terms),
            inputs=self.inputs,
            outputs=self.outputs,
        )


def decompose(p_o: Formula, spec: QuerySpec, **kw) -> List[NormalizedQuery]:
    """All normalized queries of ``p_o`` (see :class:`Decomposer`)."""
    return list(Decomposer(p_o, spec, **kw).run())
