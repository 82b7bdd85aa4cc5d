"""A small incremental CDCL SAT solver.

Literals are non-zero ints in DIMACS style.  Branching is deterministic
(lowest unassigned variable, positive phase first) so model enumeration
order is reproducible.  Assumptions are handled as forced decisions and an
unsatisfiable call reports the subset of assumptions that were responsible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set


@dataclass
class SatResult:
    sat: bool
    model: Optional[Dict[int, bool]] = None
    core: Optional[List[int]] = None

    def __bool__(self):
        return self.sat

    def literals(self) -> List[int]:
        return [v if b else -v for v, b in sorted(self.model.items())]


class ClauseDb:
    """Incremental clause database plus solver state."""

    def __init__(self, clauses: Iterable[Sequence[int]] = ()):
        self.nvars = 0
        self.clauses: List[List[int]] = []
        self.watches: Dict[int, List[int]] = {}
        self.units: List[int] = []
        self.trivially_unsat = False
        self.conflicts = 0
        self.decisions = 0
        self.calls = 0
        for c in clauses:
            self.add_clause(c)

    # database -------------------------------------------------------------
    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def _grow(self, lits):
        for l in lits:
            if l == 0:
                raise ValueError("literal 0 is not allowed")
            if abs(l) > self.nvars:
                self.nvars = abs(l)

    def add_clause(self, lits: Sequence[int]) -> None:
        lits = list(dict.fromkeys(lits))
        self._grow(lits)
        s = set(lits)
        if any(-l in s for l in lits):
            return  # tautology
        if not lits:
            self.trivially_unsat = True
            return
        self._attach(lits)

    def _attach(self, lits: List[int]) -> int:
        idx = len(self.clauses)
        self.clauses.append(lits)
        if len(lits) == 1:
            self.units.append(lits[0])
        else:
            self.watches.setdefault(lits[0], []).append(idx)
            self.watches.setdefault(lits[1], []).append(idx)
        return idx

    def block(self, literals: Sequence[int]) -> None:
        """Forbid the conjunction of ``literals``."""
        if not literals:
            raise ValueError("cannot block an empty combination")
        self.add_clause([-l for l in literals])

    # solving --------------------------------------------------------------
    def solve(self, assumptions: Sequence[int] = ()) -> SatResult:
        self.calls += 1
        self._grow(assumptions)
        if self.trivially_unsat:
            return SatResult(False, core=[])
        n = self.nvars
        value: List[int] = [0] * (n + 1)  # 1 true, -1 false, 0 unassigned
        level: List[int] = [0] * (n + 1)
        reason: List[Optional[int]] = [None] * (n + 1)
        trail: List[int] = []
        lim: List[int] = []
        clauses = self.clauses
        watches = self.watches

        def val(l):
            v = value[l if l > 0 else -l]
            return v if l > 0 else -v

        def assign(l, r):
            a = l if l > 0 else -l
            value[a] = 1 if l > 0 else -1
            level[a] = len(lim)
            reason[a] = r
            trail.append(l)

        def propagate(qhead):
            while qhead < len(trail):
                p = trail[qhead]
                qhead += 1
                falsel = -p
                ws = watches.get(falsel)
                if not ws:
                    continue
                i = 0
                j = 0
                while i < len(ws):
                    ci = ws[i]
                    c = clauses[ci]
                    if c[0] == falsel:
                        c[0], c[1] = c[1], c[0]
                    if val(c[0]) == 1:
                        ws[j] = ci
                        i += 1
                        j += 1
                        continue
                    found = False
                    for k in range(2, len(c)):
                        if val(c[k]) != -1:
                            c[1], c[k] = c[k], c[1]
                            watches.setdefault(c[1], []).append(ci)
                            found = True
                            break
                    if found:
                        i += 1
                        continue
                    ws[j] = ci
                    i += 1
                    j += 1
                    if val(c[0]) == -1:
                        while i < len(ws):
                            ws[j] = ws[i]
                            i += 1
                            j += 1
                        del ws[j:]
                        return ci, qhead
                    assign(c[0], ci)
                del ws[j:]
            return None, qhead

        def backtrack(lv):
            while len(lim) > lv:
                start = lim.pop()
                while len(trail) > start:
                    l = trail.pop()
                    a = abs(l)
                    value[a] = 0
                    reason[a] = None

        def analyze(confl):
            seen = set()
            learnt = [0]
            counter = 0
            p = None
            idx = len(trail) - 1
            cur = len(lim)
            while True:
                for q in clauses[confl]:
                    if p is not None and q == p:
                        continue
                    a = abs(q)
                    if a in seen or level[a] == 0:
                        continue
                    seen.add(a)
                    if level[a] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
                while abs(trail[idx]) not in seen:
                    idx -= 1
                p = trail[idx]
                idx -= 1
                counter -= 1
                confl = reason[abs(p)]
                if counter == 0:
                    break
                seen.discard(abs(p))
            learnt[0] = -p
            if len(learnt) == 1:
                blv = 0
            else:
                mx = max(range(1, len(learnt)), key=lambda k: level[abs(learnt[k])])
                learnt[1], learnt[mx] = learnt[mx], learnt[1]
                blv = level[abs(learnt[1])]
            return learnt, blv

        def analyze_final(lit) -> List[int]:
            # assumptions responsible for forcing ``lit`` false
            core = {-lit}
            seen = {abs(lit)}
            for l in reversed(trail):
                a = abs(l)
                if a not in seen:
                    continue
                r = reason[a]
                if r is None:
                    if level[a] > 0:
                        core.add(l)
                else:
                    for q in clauses[r]:
                        if level[abs(q)] > 0:
                            seen.add(abs(q))
            return core

        for u in self.units:
            v = val(u)
            if v == -1:
                return SatResult(False, core=[])
            if v == 0:
                assign(u, None)
        qhead = 0
        confl, qhead = propagate(qhead)
        if confl is not None:
            self.trivially_unsat = True
            return SatResult(False, core=[])

        assumptions = list(assumptions)
        while True:
            confl, qhead = propagate(qhead)
            if confl is not None:
                self.conflicts += 1
                if len(lim) == 0:
                    self.trivially_unsat = True
                    return SatResult(False, core=[])
                learnt, blv = analyze(confl)
                backtrack(blv)
                qhead = len(trail)
                ci = self._attach(learnt) if len(learnt) > 1 else None
                if ci is None:
                    self.units.append(learnt[0])
                    backtrack(0)
                    qhead = len(trail)
                    if val(learnt[0]) == -1:
                        self.trivially_unsat = True
                        return SatResult(False, core=[])
                    if val(learnt[0]) == 0:
                        assign(learnt[0], None)
                else:
                    assign(learnt[0], ci)
                continue
            # pick next decision: pending assumptions first
            nxt = 0
            while len(lim) < len(assumptions):
                a = assumptions[len(lim)]
                v = val(a)
                if v == 1:
                    lim.append(len(trail))  # dummy level keeps indices aligned
                    continue
                if v == -1:
                    core = analyze_final(-a) if level[abs(a)] > 0 else {a}
                    core = sorted((l for l in core if l in set(assumptions)), key=abs)
                    backtrack(0)
                    return SatResult(False, core=core)
                nxt = a
                break
            if nxt == 0:
                for vv in range(1, n + 1):
                    if value[vv] == 0:
                        nxt = vv
                        break
                if nxt == 0:
                    model = {vv: value[vv] == 1 for vv in range(1, n + 1)}
                    backtrack(0)
                    return SatResult(True, model=model)
                self.decisions += 1
            lim.append(len(trail))
            assign(nxt, None)


def minimize_model(clauses: Iterable[Sequence[int]], model: Dict[int, bool],
                   frozen: Iterable[int] = ()) -> Dict[int, bool]:
    """Greedily drop literals not needed to satisfy ``clauses``.

    Literals are visited in increasing variable order; a literal is removed
    when every clause stays satisfied by the remaining literals.  Variables in
    ``frozen`` are always kept.
    """
    frozen = {abs(f) for f in frozen}
    clauses = [list(dict.fromkeys(c)) for c in clauses]
    keep = dict(model)
    # count of satisfying literals per clause under the current partial model
    support = []
    occurs: Dict[int, List[int]] = {}
    for ci, c in enumerate(clauses):
        n = 0
        for l in c:
            a = abs(l)
            if a in keep and keep[a] == (l > 0):
                n += 1
                occurs.setdefault(a, []).append(ci)
        if n == 0:
            raise ValueError("model does not satisfy clause %r" % (c,))
        support.append(n)
    for v in sorted(model):
        if v in frozen:
            continue
        cis = occurs.get(v, [])
        if all(support[ci] > 1 for ci in cis):
            for ci in cis:
                support[ci] -= 1
            del keep[v]
    return keep


def enumerate_models(db: ClauseDb, over: Optional[Sequence[int]] = None, limit: int = 1 << 30):
    """Yield models, blocking each one on the variables in ``over``."""
    over = list(over) if over is not None else None
    count = 0
    while count < limit:
        r = db.solve()
        if not r.sat:
            return
        yield r.model
        count += 1
        vs = over if over is not None else sorted(r.model)
        if not vs:
            return
        db.block([v if r.model.get(v, False) else -v for v in vs])
