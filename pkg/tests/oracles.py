"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools
from fractions import Fraction


def fm_feasible(constraints, variables):
    """Fourier-Motzkin feasibility of ``(coeffs, rel, rhs)`` constraints.

    Each constraint is normalised to ``sum(a*x) rel b`` with rel in
    ``<=``/``<``; equalities become two inequalities.
    """
    rows = []
    for coeffs, rel, rhs in constraints:
        a = {v: Fraction(c) for v, c in coeffs.items() if c != 0}
        b = Fraction(rhs)
        if rel in (">=", ">"):
            a = {v: -c for v, c in a.items()}
            b = -b
            rel = "<=" if rel == ">=" else "<"
        if rel == "=":
            rows.append((a, b, False))
            rows.append(({v: -c for v, c in a.items()}, -b, False))
        else:
            rows.append((a, b, rel == "<"))
    for v in variables:
        pos, neg, rest = [], [], []
        for a, b, s in rows:
            c = a.get(v, 0)
            (pos if c > 0 else neg if c < 0 else rest).append((a, b, s))
        new = list(rest)
        for (a1, b1, s1), (a2, b2, s2) in itertools.product(pos, neg):
            c1, c2 = a1[v], -a2[v]
            a = {}
            for w in set(a1) | set(a2):
                if w == v:
                    continue
                val = a1.get(w, 0) * c2 + a2.get(w, 0) * c1
                if val != 0:
                    a[w] = val
            new.append((a, b1 * c2 + b2 * c1, s1 or s2))
        rows = new
    for a, b, s in rows:
        if s and not 0 < b:
            return False
        if not s and not 0 <= b:
            return False
    return True


# ---------------------------------------------------------------------------
# brute-force verdict oracle
#
# Works on the user-level formula and the raw layer weights; the only shared
# pieces are the exact LP (checked against fm_feasible elsewhere) and ICP for
# nonlinear conjunctions.

from mosaicverify.formula import (And, ArgmaxIs, Atom, Const, Iff, Implies, Not, Or)
from mosaicverify.poly import Poly
from mosaicverify.theory.icp import icp_check
from mosaicverify.theory.simplex import Unknown, lp_feasible

_NEG = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
_OK = {"<": lambda v: v < 0, "<=": lambda v: v <= 0, "=": lambda v: v == 0,
       "!=": lambda v: v != 0, ">=": lambda v: v >= 0, ">": lambda v: v > 0}


def pattern_cells(net, box, inputs):
    """Every activation pattern whose cell meets ``box``: ``(pattern, A, b, cell)``.

    Depth-first over neurons in layer order with infeasible prefixes pruned;
    ``cell`` holds ``(coeffs, rel, rhs)`` constraints over ``inputs``.
    """
    n = len(inputs)
    rng = []
    for v in inputs:
        rng.append(({v: Fraction(1)}, ">=", Fraction(box[v][0])))
        rng.append(({v: Fraction(1)}, "<=", Fraction(box[v][1])))
    out = []
    layers = [(L.weights, L.bias, L.activation == "relu") for L in net.layers]

    def affine(W, bias, A, c):
        nA = [[sum((w * A[i][j] for i, w in enumerate(row)), Fraction(0)) for j in range(n)] for row in W]
        nc = [sum((w * c[i] for i, w in enumerate(row)), Fraction(0)) + bi for row, bi in zip(W, bias)]
        return nA, nc

    def rec(li, k, A, c, pre, pattern, cell):
        if li == len(layers):
            out.append((tuple(pattern), A, c, list(cell)))
            return
        W, bias, relu = layers[li]
        if pre is None:
            pA, pc = affine(W, bias, A, c)
            if not relu:
                rec(li + 1, 0, pA, pc, None, pattern, cell)
                return
            pre = (pA, pc)
            A, c = [r[:] for r in pA], pc[:]
        if k == len(W):
            rec(li + 1, 0, A, c, None, pattern, cell)
            return
        row = {v: a for v, a in zip(inputs, pre[0][k]) if a}
        for active in (True, False):
            h = (row, ">=" if active else "<=", -pre[1][k])
            if not lp_feasible(cell + [h] + rng, list(inputs)):
                continue
            A2, c2 = A, c
            if not active:
                A2 = [r[:] for r in A]
                c2 = c[:]
                A2[k] = [Fraction(0)] * n
                c2[k] = Fraction(0)
            rec(li, k + 1, A2, c2, pre, pattern + [active], cell + [h])

    rec(0, 0, [[Fraction(int(i == j)) for j in range(n)] for i in range(n)], [Fraction(0)] * n,
        None, [], [])
    return out


def _raw_atoms(f, acc):
    """Distinct ``(poly, rel)`` atoms of a user-level formula (argmax expanded)."""
    if isinstance(f, Atom):
        key = (f.lhs, f.rel)
        if key not in acc:
            acc.append(key)
    elif isinstance(f, ArgmaxIs):
        _raw_atoms(_argmax(f), acc)
    elif isinstance(f, Not):
        _raw_atoms(f.arg, acc)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _raw_atoms(a, acc)
    elif isinstance(f, (Implies, Iff)):
        _raw_atoms(f.lhs, acc)
        _raw_atoms(f.rhs, acc)
    return acc


def _argmax(f):
    me = Poly.var(f.outputs[f.index - 1])
    return And(tuple(Atom(me - Poly.var(o), ">=") for j, o in enumerate(f.outputs) if j != f.index - 1))


def kleene3(f, val):
    """Three-valued evaluation of a user-level formula; ``val`` maps atom keys to bools."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return val.get((f.lhs, f.rel))
    if isinstance(f, ArgmaxIs):
        return kleene3(_argmax(f), val)
    if isinstance(f, Not):
        r = kleene3(f.arg, val)
        return None if r is None else not r
    if isinstance(f, And):
        rs = [kleene3(a, val) for a in f.args]
        return False if False in rs else (None if None in rs else True)
    if isinstance(f, Or):
        rs = [kleene3(a, val) for a in f.args]
        return True if True in rs else (None if None in rs else False)
    if isinstance(f, Implies):
        return kleene3(Or((Not(f.lhs), f.rhs)), val)
    if isinstance(f, Iff):
        a, b = kleene3(f.lhs, val), kleene3(f.rhs, val)
        return None if a is None or b is None else a == b
    raise TypeError(f)


def _conj_sat(lits, base, box, inputs):
    """Satisfiability of ``lits`` (``(poly, rel)`` over inputs, ``!=`` allowed) plus ``base``."""
    for i, (p, rel) in enumerate(lits):
        if rel == "!=":
            res = "unsat"
            for r in ("<", ">"):
                sub = _conj_sat(lits[:i] + [(p, r)] + lits[i + 1:], base, box, inputs)
                if sub == "sat":
                    return "sat"
                if sub == "unknown":
                    res = "unknown"
            return res
    cons = list(lits) + list(base)
    if all(p.degree() <= 1 for p, _ in cons):
        lin = [(dict(p.linear_coeffs()), rel, -p.constant()) for p, rel in cons]
        return "sat" if lp_feasible(lin, list(inputs)) else "unsat"
    r = icp_check(cons, box, deadline=None, max_boxes=200000)
    if isinstance(r, Unknown):
        return "unknown"
    return "sat" if r else "unsat"


def oracle_verdict(spec, net):
    """'unsafe', 'safe' or 'unknown' by enumerating every activation pattern.

    Per feasible pattern cell the outputs are replaced by the cell's affine
    map and the formula's atom truth assignments are searched depth first
    with three-valued pruning; each satisfying assignment is checked exactly
    (LP) or by ICP when it has nonlinear atoms.
    """
    inputs, outputs = list(spec.inputs), list(spec.outputs)
    box = {v: (Fraction(spec.ranges[v][0]), Fraction(spec.ranges[v][1])) for v in inputs}
    f = spec.target()
    unknown = False
    for pattern, A, c, cell in pattern_cells(net, box, inputs):
        sub = {x: Poly.linear({z: a for z, a in zip(inputs, row) if a}, ci)
               for x, row, ci in zip(outputs, A, c)}
        base = []
        for coeffs, rel, rhs in cell:
            base.append((Poly.linear(coeffs, -rhs), rel))
        for z in inputs:
            base.append((Poly.var(z) - box[z][0], ">="))
            base.append((Poly.var(z) - box[z][1], "<="))
        for x in outputs:
            lo, hi = spec.ranges[x]
            base.append((sub[x] - Fraction(lo), ">="))
            base.append((sub[x] - Fraction(hi), "<="))
        atoms = _raw_atoms(f, [])
        subst = {key: key[0].substitute(sub) for key in atoms}
        res = _search(f, atoms, subst, {}, [], base, box, inputs)
        if res == "sat":
            return "unsafe"
        if res == "unknown":
            unknown = True
    return "unknown" if unknown else "safe"


def _search(f, atoms, subst, val, lits, base, box, inputs):
    k = kleene3(f, val)
    if k is False:
        return "unsat"
    if k is True:
        return _conj_sat(lits, base, box, inputs)
    key = next(a for a in atoms if a not in val)
    p, rel = subst[key], key[1]
    res = "unsat"
    for truth in (True, False):
        r = rel if truth else _NEG[rel]
        if p.is_constant():
            if _OK[r](p.constant()) is False:
                continue
            new = lits
        else:
            new = lits + [(p, r)]
            if p.degree() <= 1 and r != "!=":
                lin = [(dict(q.linear_coeffs()), rr, -q.constant()) for q, rr in new + base
                       if q.degree() <= 1 and rr != "!="]
                if not lp_feasible(lin, list(inputs)):
                    continue
        val[key] = truth
        sub = _search(f, atoms, subst, val, new, base, box, inputs)
        del val[key]
        if sub == "sat":
            return "sat"
        if sub == "unknown":
            res = "unknown"
    return res


def grid_verdict(spec, net, n=41):
    """Counterexamples found on an ``n``-point-per-axis grid (a lower bound only)."""
    from mosaicverify.formula import evaluate
    found = []
    for z in grid(spec, n):
        x = net.evaluate(z)
        st = dict(zip(spec.inputs, z))
        st.update(zip(spec.outputs, x))
        if spec.in_ranges(st) and evaluate(spec.target(), st):
            found.append(z)
    return found


# ---------------------------------------------------------------------------
# sampling helpers

def grid(spec, n):
    """Rational grid with ``n`` points per input axis over the input ranges."""
    axes = []
    for v in spec.inputs:
        lo, hi = Fraction(spec.ranges[v][0]), Fraction(spec.ranges[v][1])
        if n == 1 or lo == hi:
            axes.append([lo])
        else:
            axes.append([lo + (hi - lo) * i / (n - 1) for i in range(n)])
    return itertools.product(*axes)


def sample_state(rng, spec, denominator=1000):
    """Random rational state in the declared ranges (inputs and outputs)."""
    st = {}
    for v in spec.variables():
        lo, hi = Fraction(spec.ranges[v][0]), Fraction(spec.ranges[v][1])
        st[v] = lo + (hi - lo) * Fraction(rng.randint(0, denominator), denominator)
    return st


def sample_box(rng, box, denominator=1000):
    return {v: Fraction(lo) + (Fraction(hi) - Fraction(lo)) * Fraction(rng.randint(0, denominator), denominator)
            for v, (lo, hi) in box.items()}


# ---------------------------------------------------------------------------
# random instances

def _output_bounds(net, box, inputs):
    """Interval bounds of the network outputs over an input box."""
    lo = [Fraction(box[v][0]) for v in inputs]
    hi = [Fraction(box[v][1]) for v in inputs]
    for L in net.layers:
        nlo, nhi = [], []
        for row, b in zip(L.weights, L.bias):
            a = sum((w * (l if w >= 0 else h) for w, l, h in zip(row, lo, hi)), Fraction(0)) + b
            c = sum((w * (h if w >= 0 else l) for w, l, h in zip(row, lo, hi)), Fraction(0)) + b
            if L.activation == "relu":
                a, c = max(a, Fraction(0)), max(c, Fraction(0))
            nlo.append(a)
            nhi.append(c)
        lo, hi = nlo, nhi
    return lo, hi


def _round_out(lo, hi, q=4):
    import math
    return Fraction(math.floor(lo * q), q), Fraction(math.ceil(hi * q), q)


def random_instance(seed):
    """``(spec, net)`` with at most 3 inputs, 12 ReLUs and 10 atoms of degree <= 2."""
    import random
    from mosaicverify.formula import QuerySpec
    from mosaicverify.network import random_network

    rng = random.Random(seed)
    n_in = rng.randint(1, 3)
    n_out = rng.randint(1, 2)
    if rng.random() < 0.5:
        hidden = [rng.randint(2, 8)]
    else:
        a = rng.randint(2, 6)
        hidden = [a, rng.randint(2, 12 - a)]
    net = random_network([n_in] + hidden + [n_out], seed=rng.randint(0, 10 ** 6), scale=Fraction(3, 2))
    inputs = ["z%d" % (i + 1) for i in range(n_in)]
    outputs = ["x%d" % (j + 1) for j in range(n_out)]
    ranges = {v: (Fraction(-1), Fraction(1)) for v in inputs}
    lo, hi = _output_bounds(net, ranges, inputs)
    for x, l, h in zip(outputs, lo, hi):
        ranges[x] = _round_out(l, h)
    names = inputs + outputs

    def sample_mid(v):
        l, h = ranges[v]
        return (l + h) / 2, max(h - l, Fraction(1, 4))

    def rand_poly(deg):
        p = Poly.const(0)
        vs = rng.sample(names, min(len(names), rng.randint(1, 2)))
        if not any(v in outputs for v in vs) and rng.random() < 0.7:
            vs[0] = rng.choice(outputs)
        for v in vs:
            p = p + Poly.var(v).scale(Fraction(rng.choice([-2, -1, 1, 2])))
        if deg == 2:
            a, b = rng.choice(names), rng.choice(names)
            p = p + (Poly.var(a) * Poly.var(b)).scale(Fraction(rng.choice([-1, 1])))
        # put the threshold near a value the term actually takes
        st = {v: sample_mid(v)[0] + sample_mid(v)[1] * Fraction(rng.randint(-4, 4), 10) for v in names}
        return p - p.evaluate(st) + Fraction(rng.randint(-2, 2), 10)

    n_atoms = rng.randint(2, 10)
    atoms = []
    for _ in range(n_atoms):
        deg = 2 if rng.random() < 0.4 else 1
        p = rand_poly(deg)
        rel = rng.choice(["<", "<=", ">", ">="])
        if deg == 1 and rng.random() < 0.05:
            rel = "="
        atoms.append(Atom(p, rel))

    def build(items):
        if len(items) == 1:
            f = items[0]
            return Not(f) if rng.random() < 0.2 else f
        k = rng.randint(1, len(items) - 1)
        l, r = build(items[:k]), build(items[k:])
        op = rng.random()
        if op < 0.45:
            return And((l, r))
        if op < 0.85:
            return Or((l, r))
        if op < 0.95:
            return Implies(l, r)
        return Iff(l, r)

    # a top-level conjunction of 1-3 atoms keeps the safe/unsafe mix balanced
    k = rng.randint(1, min(3, n_atoms - 1))
    f = And(tuple(atoms[:k]) + (build(atoms[k:]),))
    if n_out >= 2 and rng.random() < 0.2:
        f = And((ArgmaxIs(rng.randint(1, n_out), tuple(outputs)), f))
    mode = "prove" if rng.random() < 0.3 else "falsify"
    return QuerySpec(f, tuple(inputs), tuple(outputs), ranges, mode), net
