"""Exact incremental simplex for linear real arithmetic.

This is the general simplex used in SMT solvers: every linear row gets a
slack variable, bounds are asserted on variables, and ``check`` restores
bound consistency with Bland's rule.  Strict bounds use delta-rationals
``c + k*delta`` stored as pairs and compared lexicographically, which makes
strict and non-strict constraints uniform.  A conflict is reported as the
set of bound tags that are jointly infeasible.
"""
from __future__ import annotations

from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .._accel import row_axpy
from .._rational import Q, frac

_ZERO = Q(0)


class PivotLimit(RuntimeError):
    pass


def _lt(ac, ak, bc, bk):
    return ac < bc or (ac == bc and ak < bk)


class Simplex:
    """Incremental simplex over ``nvars`` structural variables (indices 0..n-1)."""

    max_pivots = 200000

    def __init__(self, nvars: int):
        self.n = nvars
        self.next_var = nvars
        self.rows: Dict[int, Dict[int, object]] = {}
        self.cols: Dict[int, set] = {}
        self.vc: Dict[int, object] = {i: _ZERO for i in range(nvars)}
        self.vk: Dict[int, object] = {i: _ZERO for i in range(nvars)}
        self.lo: Dict[int, tuple] = {}
        self.hi: Dict[int, tuple] = {}
        self.row_key: Dict[tuple, int] = {}
        self.slack_def: Dict[int, tuple] = {}
        self._trail: List[tuple] = []
        self._marks: List[Tuple[int, int]] = []
        self._slacks: List[int] = []
        self.pivots = 0
        self.checks = 0

    # rows -------------------------------------------------------------------
    def slack_for(self, coeffs: Dict[int, object]) -> int:
        """Variable standing for ``sum(coeffs[j] * x_j)`` (created on demand)."""
        key = tuple(sorted(coeffs.items()))
        s = self.row_key.get(key)
        if s is not None:
            return s
        s = self.next_var
        self.next_var += 1
        row: Dict[int, object] = {}
        vc = _ZERO
        vk = _ZERO
        for j, a in key:
            a = Q(a)
            if j in self.rows:
                # substitute the basic variable by its row
                row_axpy_tracked(row, self.rows[j], a)
            else:
                row[j] = row.get(j, _ZERO) + a
                if row[j] == 0:
                    del row[j]
            vc += a * self.vc[j]
            vk += a * self.vk[j]
        self.rows[s] = row
        for j in row:
            self.cols.setdefault(j, set()).add(s)
        self.vc[s] = vc
        self.vk[s] = vk
        self.row_key[key] = s
        self.slack_def[s] = key
        self._slacks.append(s)
        return s

    # bounds -----------------------------------------------------------------
    def assert_upper(self, x: int, c, k=0, tag: Hashable = None) -> Optional[List]:
        c = Q(c)
        k = Q(k)
        cur = self.hi.get(x)
        if cur is not None and not _lt(c, k, cur[0], cur[1]):
            return None
        lo = self.lo.get(x)
        if lo is not None and _lt(c, k, lo[0], lo[1]):
            return _tags([tag, lo[2]])
        self._trail.append(("hi", x, cur))
        self.hi[x] = (c, k, tag)
        if x not in self.rows and _lt(c, k, self.vc[x], self.vk[x]):
            self._update(x, c, k)
        return None

    def assert_lower(self, x: int, c, k=0, tag: Hashable = None) -> Optional[List]:
        c = Q(c)
        k = Q(k)
        cur = self.lo.get(x)
        if cur is not None and not _lt(cur[0], cur[1], c, k):
            return None
        hi = self.hi.get(x)
        if hi is not None and _lt(hi[0], hi[1], c, k):
            return _tags([tag, hi[2]])
        self._trail.append(("lo", x, cur))
        self.lo[x] = (c, k, tag)
        if x not in self.rows and _lt(self.vc[x], self.vk[x], c, k):
            self._update(x, c, k)
        return None

    def assert_constraint(self, coeffs: Dict[int, object], rel: str, rhs, tag: Hashable = None):
        """Assert ``sum(coeffs) rel rhs`` with rel in ``<=, <, >=, >, =``.

        Returns a conflict (list of tags) when the new bound immediately
        contradicts an existing one, else None.
        """
        coeffs = {j: Q(a) for j, a in coeffs.items() if a != 0}
        rhs = Q(rhs)
        if not coeffs:
            ok = {"<=": 0 <= rhs, "<": 0 < rhs, ">=": 0 >= rhs, ">": 0 > rhs, "=": rhs == 0}[rel]
            return None if ok else _tags([tag])
        first = min(coeffs)
        lead = coeffs[first]
        if lead != 1:
            coeffs = {j: a / lead for j, a in coeffs.items()}
            rhs = rhs / lead
            if lead < 0:
                rel = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}[rel]
        x = first if len(coeffs) == 1 else self.slack_for(coeffs)
        if rel == "<=":
            return self.assert_upper(x, rhs, 0, tag)
        if rel == "<":
            return self.assert_upper(x, rhs, -1, tag)
        if rel == ">=":
            return self.assert_lower(x, rhs, 0, tag)
        if rel == ">":
            return self.assert_lower(x, rhs, 1, tag)
        if rel == "=":
            return self.assert_upper(x, rhs, 0, tag) or self.assert_lower(x, rhs, 0, tag)
        raise ValueError(rel)

    # push / pop -------------------------------------------------------------
    def push(self):
        self._marks.append((len(self._trail), len(self._slacks)))

    def pop(self):
        t, s = self._marks.pop()
        while len(self._trail) > t:
            which, x, old = self._trail.pop()
            d = self.hi if which == "hi" else self.lo
            if old is None:
                d.pop(x, None)
            else:
                d[x] = old
        while len(self._slacks) > s:
            self._remove_slack(self._slacks.pop())

    def _remove_slack(self, s):
        if s not in self.rows:
            users = self.cols.get(s)
            if users:
                b = min(users)
                self._pivot(b, s)
                # b is nonbasic now and must sit within its bounds
                lo, hi = self.lo.get(b), self.hi.get(b)
                if lo is not None and _lt(self.vc[b], self.vk[b], lo[0], lo[1]):
                    self._update(b, lo[0], lo[1])
                elif hi is not None and _lt(hi[0], hi[1], self.vc[b], self.vk[b]):
                    self._update(b, hi[0], hi[1])
            else:
                self.cols.pop(s, None)
        if s in self.rows:
            for j in self.rows[s]:
                cs = self.cols.get(j)
                if cs is not None:
                    cs.discard(s)
                    if not cs:
                        del self.cols[j]
            del self.rows[s]
        self.cols.pop(s, None)
        del self.vc[s]
        del self.vk[s]
        self.lo.pop(s, None)
        self.hi.pop(s, None)
        del self.row_key[self.slack_def.pop(s)]

    # core -------------------------------------------------------------------
    def _update(self, x, c, k):
        dc = c - self.vc[x]
        dk = k - self.vk[x]
        for b in self.cols.get(x, ()):
            a = self.rows[b][x]
            self.vc[b] += a * dc
            self.vk[b] += a * dk
        self.vc[x] = c
        self.vk[x] = k

    def _pivot(self, b, n):
        """Make nonbasic ``n`` basic in place of basic ``b`` (values unchanged)."""
        self.pivots += 1
        row = self.rows.pop(b)
        a = row.pop(n)
        inv = 1 / a
        new = {j: -v * inv for j, v in row.items()}
        new[b] = inv
        for j in row:
            cs = self.cols[j]
            cs.discard(b)
        cs_n = self.cols.pop(n)
        cs_n.discard(b)
        for j in new:
            self.cols.setdefault(j, set()).add(n)
        self.rows[n] = new
        for r in cs_n:
            rr = self.rows[r]
            f = rr.pop(n)
            added, removed = row_axpy(rr, new, f, None)
            for j in added:
                self.cols.setdefault(j, set()).add(r)
            for j in removed:
                cs = self.cols[j]
                cs.discard(r)
                if not cs:
                    del self.cols[j]
        # drop empty column sets
        for j in list(row):
            if j in self.cols and not self.cols[j]:
                del self.cols[j]

    def _pivot_and_update(self, b, n, c, k):
        a = self.rows[b][n]
        tc = (c - self.vc[b]) / a
        tk = (k - self.vk[b]) / a
        self.vc[b] = c
        self.vk[b] = k
        self.vc[n] += tc
        self.vk[n] += tk
        for r in self.cols.get(n, ()):
            if r == b:
                continue
            f = self.rows[r][n]
            self.vc[r] += f * tc
            self.vk[r] += f * tk
        self._pivot(b, n)

    def check(self) -> Optional[List]:
        """Return None when the asserted bounds are satisfiable, else a conflict."""
        self.checks += 1
        budget = self.max_pivots
        while True:
            viol = None
            below = False
            for b in sorted(self.rows):
                lo = self.lo.get(b)
                if lo is not None and _lt(self.vc[b], self.vk[b], lo[0], lo[1]):
                    viol, below = b, True
                    break
                hi = self.hi.get(b)
                if hi is not None and _lt(hi[0], hi[1], self.vc[b], self.vk[b]):
                    viol, below = b, False
                    break
            if viol is None:
                return None
            row = self.rows[viol]
            entering = None
            for j in sorted(row):
                a = row[j]
                if (a > 0) == below:
                    hi = self.hi.get(j)
                    if hi is None or _lt(self.vc[j], self.vk[j], hi[0], hi[1]):
                        entering = j
                        break
                else:
                    lo = self.lo.get(j)
                    if lo is None or _lt(lo[0], lo[1], self.vc[j], self.vk[j]):
                        entering = j
                        break
            if entering is None:
                tags = [self.lo[viol][2] if below else self.hi[viol][2]]
                for j, a in row.items():
                    if (a > 0) == below:
                        tags.append(self.hi[j][2])
                    else:
                        tags.append(self.lo[j][2])
                return _tags(tags)
            budget -= 1
            if budget < 0:
                raise PivotLimit("simplex exceeded %d pivots" % self.max_pivots)
            bound = self.lo[viol] if below else self.hi[viol]
            self._pivot_and_update(viol, entering, bound[0], bound[1])

    # models -----------------------------------------------------------------
    def delta(self):
        """A positive rational delta under which the delta-assignment is a real model."""
        d = Q(1)
        for x in self.vc:
            vc, vk = self.vc[x], self.vk[x]
            lo = self.lo.get(x)
            if lo is not None and lo[0] < vc and lo[1] > vk:
                d = min(d, (vc - lo[0]) / (lo[1] - vk))
            hi = self.hi.get(x)
            if hi is not None and vc < hi[0] and vk > hi[1]:
                d = min(d, (hi[0] - vc) / (vk - hi[1]))
        return d

    def model(self) -> List:
        """Rational values of the structural variables (call after a sat check)."""
        d = self.delta()
        return [self.vc[i] + self.vk[i] * d for i in range(self.n)]

    # optimisation -------------------------------------------------------------
    def optimize(self, obj: Dict[int, object], maximize: bool = True):
        """Optimise over the current (feasible, non-strict) bounds.

        Returns ``("optimal", value)`` or ``("unbounded", None)``.  Strict
        bounds are treated as their closures by the caller.
        """
        sign = 1 if maximize else -1
        coeffs = {j: sign * Q(a) for j, a in obj.items() if a != 0}
        if not coeffs:
            return "optimal", _ZERO
        z = self.slack_for(coeffs)
        try:
            while True:
                row = self.rows.get(z)
                if row is None:
                    # z became nonbasic: pivot it back using any row that has it
                    self._pivot(min(self.cols[z]), z)
                    row = self.rows[z]
                entering = None
                for j in sorted(row):
                    a = row[j]
                    if a > 0:
                        hi = self.hi.get(j)
                        if hi is None or self.vc[j] < hi[0]:
                            entering, direction = j, 1
                            break
                    else:
                        lo = self.lo.get(j)
                        if lo is None or self.vc[j] > lo[0]:
                            entering, direction = j, -1
                            break
                if entering is None:
                    return "optimal", sign * self.vc[z]
                j = entering
                # ratio test
                best = None
                leave = None
                if direction > 0 and j in self.hi:
                    best = self.hi[j][0] - self.vc[j]
                elif direction < 0 and j in self.lo:
                    best = self.vc[j] - self.lo[j][0]
                for b in sorted(self.cols.get(j, ())):
                    if b == z:
                        continue
                    a = self.rows[b][j] * direction
                    if a > 0 and b in self.hi:
                        t = (self.hi[b][0] - self.vc[b]) / a
                    elif a < 0 and b in self.lo:
                        t = (self.lo[b][0] - self.vc[b]) / a
                    else:
                        continue
                    if best is None or t < best:
                        best, leave = t, b
                if best is None:
                    return "unbounded", None
                self.pivots += 1
                if leave is None:
                    self._update(j, self.vc[j] + direction * best, self.vk[j])
                else:
                    a = self.rows[leave][j] * direction
                    target = self.hi[leave][0] if a > 0 else self.lo[leave][0]
                    self._pivot_and_update(leave, j, target, self.vk[leave])
        finally:
            pass


def row_axpy_tracked(dst, src, factor):
    row_axpy(dst, src, factor, None)


def _tags(tags: Iterable) -> List:
    out = []
    for t in tags:
        if t is not None and t not in out:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# one-shot helpers working on named constraint lists

class Sat:
    __slots__ = ("witness",)

    def __init__(self, witness):
        self.witness = witness

    def __repr__(self):
        return "Sat(%r)" % (self.witness,)

    def __bool__(self):
        return True


class Unsat:
    __slots__ = ("core",)

    def __init__(self, core=None):
        self.core = core

    def __repr__(self):
        return "Unsat()"

    def __bool__(self):
        return False


class Unknown:
    __slots__ = ("reason",)

    def __init__(self, reason=""):
        self.reason = reason

    def __repr__(self):
        return "Unknown(%r)" % self.reason

    def __bool__(self):
        return False


LinCon = Tuple[Dict[str, object], str, object]


def _build(constraints: Sequence[LinCon], variables: Optional[Sequence[str]] = None,
           closure: bool = False):
    names = list(variables) if variables is not None else sorted(
        {v for c, _, _ in constraints for v in c})
    index = {v: i for i, v in enumerate(names)}
    sx = Simplex(len(names))
    for t, (coeffs, rel, rhs) in enumerate(constraints):
        if closure:
            rel = {"<": "<=", ">": ">="}.get(rel, rel)
        conflict = sx.assert_constraint({index[v]: a for v, a in coeffs.items()}, rel, rhs, t)
        if conflict is not None:
            return names, sx, conflict
    return names, sx, None


def lp_feasible(constraints: Sequence[LinCon], variables: Optional[Sequence[str]] = None):
    """Decide a conjunction of linear constraints ``(coeffs, rel, rhs)`` exactly.

    Returns :class:`Sat` with a rational witness (dict name -> Fraction) that
    satisfies every constraint, or :class:`Unsat` with the indices of an
    infeasible subset.
    """
    names, sx, conflict = _build(constraints, variables)
    if conflict is None:
        conflict = sx.check()
    if conflict is not None:
        return Unsat(sorted(conflict))
    vals = sx.model()
    return Sat({v: frac(x) for v, x in zip(names, vals)})


def lp_extremum(objective: Dict[str, object], constraints: Sequence[LinCon], direction: str = "max",
                variables: Optional[Sequence[str]] = None):
    """Optimum of a linear objective over the closure of the constraints.

    Returns a Fraction, or the string ``"unbounded"``.  Raises ValueError
    (InfeasibleInput) when the constraints are infeasible.
    """
    if variables is None:
        variables = sorted({v for c, _, _ in constraints for v in c} | set(objective))
    names, sx, conflict = _build(constraints, variables, closure=True)
    if conflict is None:
        conflict = sx.check()
    if conflict is not None:
        raise InfeasibleInput("constraint system is infeasible")
    index = {v: i for i, v in enumerate(names)}
    status, value = sx.optimize({index[v]: a for v, a in objective.items()}, direction == "max")
    if status == "unbounded":
        return "unbounded"
    return frac(value)


class InfeasibleInput(ValueError):
    pass
