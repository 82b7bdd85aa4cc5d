"""Exact reachability over activation patterns.

The star of an azulejo is kept implicitly: generator coordinates are the
network inputs themselves, so a star is an affine image ``x = A z + b`` of
the input polytope ``P(z)``.  ``P`` lives in one incremental simplex; the
depth-first traversal pushes a half-space when it commits a neuron to a
phase and pops it when backtracking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from ._rational import Q, frac
from .mosaic import NormalizedQuery, lit_constraint
from .network import HalfSpace, Network, halfspace_holds
from .theory.simplex import Simplex

_FLIP = {"<=": ">", "<": ">=", ">=": "<", ">": "<="}


@dataclass(frozen=True)
class CexRegion:
    """Input polytope ``iota`` on which the network equals ``z -> A z + b``."""

    iota: Tuple[HalfSpace, ...]
    omega: Tuple[Tuple[Tuple[Fraction, ...], ...], Tuple[Fraction, ...]]
    pattern: Tuple[bool, ...]
    witness: Tuple[Fraction, ...]
    query: int = 0

    def contains(self, z: Sequence) -> bool:
        return all(halfspace_holds(h, z) for h in self.iota)

    def apply(self, z: Sequence) -> List[Fraction]:
        A, b = self.omega
        return [sum((a * frac(v) for a, v in zip(row, z)), Fraction(0)) + c for row, c in zip(A, b)]

    def pattern_bits(self) -> str:
        return "".join("1" if p else "0" for p in self.pattern)


@dataclass
class ReachStats:
    stars: int = 0
    lp_calls: int = 0
    splits: int = 0
    output_checks: int = 0
    single_calls: int = 0


def _halfspace(coeffs: Mapping[str, Fraction], rel: str, rhs, inputs: Sequence[str]) -> HalfSpace:
    return tuple(frac(coeffs.get(v, 0)) for v in inputs), rel, frac(rhs)


def base_system(q: NormalizedQuery, ranges: Mapping[str, Tuple]) -> List[HalfSpace]:
    """Azulejo plus input ranges as half-spaces over the inputs."""
    hs = []
    for coeffs, rel, rhs in q.input_system():
        hs.append(_halfspace(coeffs, rel, rhs, q.inputs))
    for i, v in enumerate(q.inputs):
        e = tuple(Fraction(int(i == j)) for j in range(len(q.inputs)))
        hs.append((e, ">=", frac(ranges[v][0])))
        hs.append((e, "<=", frac(ranges[v][1])))
    return hs


def output_systems(q: NormalizedQuery, ranges: Mapping[str, Tuple]):
    """Each output conjunction (plus output ranges) as constraints over ``inputs + outputs``."""
    names = list(q.inputs) + list(q.outputs)
    rng = []
    for v in q.outputs:
        rng.append(({v: Fraction(1)}, ">=", frac(ranges[v][0])))
        rng.append(({v: Fraction(1)}, "<=", frac(ranges[v][1])))
    out = []
    for conj in q.output_dnf:
        out.append([lit_constraint(l) for l in conj] + rng)
    return names, out


def _substitute(cons, inputs, outputs, A, b) -> List[HalfSpace]:
    """Replace outputs by ``A z + b`` in ``(coeffs, rel, rhs)`` constraints."""
    idx = {v: i for i, v in enumerate(inputs)}
    oidx = {v: j for j, v in enumerate(outputs)}
    res = []
    for coeffs, rel, rhs in cons:
        row = [Q(0)] * len(inputs)
        r = Q(rhs)
        for v, a in coeffs.items():
            a = Q(a)
            if v in idx:
                row[idx[v]] += a
            else:
                j = oidx[v]
                for i in range(len(inputs)):
                    row[i] += a * A[j][i]
                r -= a * b[j]
        res.append((tuple(frac(x) for x in row), rel, frac(r)))
    return res


class _Walker:
    """Depth-first pattern traversal under a shared simplex."""

    def __init__(self, net: Network, n_inputs: int, stats: ReachStats):
        self.net = net
        self.n = n_inputs
        self.sx = Simplex(n_inputs)
        self.stats = stats

    def _assert(self, h: HalfSpace, tag="h"):
        coeffs, rel, rhs = h
        return self.sx.assert_constraint({i: Q(a) for i, a in enumerate(coeffs) if a}, rel, Q(rhs), tag)

    def feasible_with(self, hs: Sequence[HalfSpace]) -> Optional[List]:
        """Model of the current system plus ``hs`` (restored afterwards), or None."""
        self.stats.lp_calls += 1
        self.sx.push()
        try:
            for h in hs:
                if self._assert(h) is not None:
                    return None
            if self.sx.check() is not None:
                return None
            return self.sx.model()
        finally:
            self.sx.pop()

    def assert_all(self, hs: Sequence[HalfSpace]) -> bool:
        for h in hs:
            if self._assert(h) is not None:
                return False
        self.stats.lp_calls += 1
        return self.sx.check() is None

    def walk(self, visit: Callable[[Tuple[bool, ...], list, list, List[HalfSpace], list], bool]):
        """Call ``visit(pattern, A, b, cell, model)`` for every feasible pattern leaf.

        ``visit`` returns True to stop the traversal.
        """
        n = self.n
        A0 = [[Q(int(i == j)) for j in range(n)] for i in range(n)]
        c0 = [Q(0)] * n
        model = self.sx.model()
        layers = self.net._qlayers
        self.stats.stars += 1

        def affine(W, bias, A, c):
            newA, newc = [], []
            for row, bi in zip(W, bias):
                newA.append([sum((w * A[i][j] for i, w in enumerate(row) if w), Q(0)) for j in range(n)])
                newc.append(sum((w * c[i] for i, w in enumerate(row) if w), bi))
            return newA, newc

        def rec(li, k, A, c, pre_A, pre_c, pattern, cell, model):
            # li: layer index, k: neuron within the layer (relu layers only)
            if li == len(layers):
                return visit(tuple(pattern), A, c, cell, model)
            W, bias, relu = layers[li]
            if pre_A is None:
                pre_A, pre_c = affine(W, bias, A, c)
                if not relu:
                    return rec(li + 1, 0, pre_A, pre_c, None, None, pattern, cell, model)
                A = [row[:] for row in pre_A]
                c = pre_c[:]
            if k == len(W):
                return rec(li + 1, 0, A, c, None, None, pattern, cell, model)
            a = tuple(frac(v) for v in pre_A[k])
            rhs = frac(-pre_c[k])
            act = (a, ">=", rhs)
            ina = (a, "<=", rhs)
            val = sum((x * m for x, m in zip(pre_A[k], model)), pre_c[k])
            # the current model already witnesses one phase
            m_act = model if val >= 0 else None
            m_ina = model if val <= 0 else None
            if m_act is None:
                m_act = self.feasible_with([act])
            if m_ina is None:
                m_ina = self.feasible_with([ina])
            if m_act is not None and m_ina is not None:
                self.stats.splits += 1
                self.stats.stars += 1
            for phase, h, m in ((True, act, m_act), (False, ina, m_ina)):
                if m is None:
                    continue
                self.sx.push()
                ok = self._assert(h) is None and self.sx.check() is None
                if not ok:  # pragma: no cover - feasibility was just established
                    self.sx.pop()
                    continue
                A2, c2 = A, c
                if not phase:
                    A2 = [row[:] for row in A]
                    c2 = c[:]
                    A2[k] = [Q(0)] * n
                    c2[k] = Q(0)
                pattern.append(phase)
                cell.append(h)
                stop = rec(li, k + 1, A2, c2, pre_A, pre_c, pattern, cell, m)
                pattern.pop()
                cell.pop()
                self.sx.pop()
                if stop:
                    return True
            return False

        return rec(0, 0, A0, c0, None, None, [], [], model)


def enumerate_regions(net: Network, q: NormalizedQuery, ranges: Mapping[str, Tuple], *,
                      extra: Sequence[HalfSpace] = (), first_only: bool = False,
                      stats: Optional[ReachStats] = None) -> List[CexRegion]:
    """All activation-pattern regions of the azulejo where some output conjunction is feasible.

    Regions are returned sorted by pattern bits.  ``extra`` further restricts
    the input polytope (used by the exclusion loop).
    """
    stats = stats if stats is not None else ReachStats()
    inputs, outputs = list(q.inputs), list(q.outputs)
    if len(inputs) != net.n_inputs or len(outputs) != net.n_outputs:
        raise ValueError("query has %d inputs/%d outputs, network has %d/%d"
                         % (len(inputs), len(outputs), net.n_inputs, net.n_outputs))
    base = base_system(q, ranges) + list(extra)
    _, systems = output_systems(q, ranges)
    w = _Walker(net, len(inputs), stats)
    if not w.assert_all(base):
        return []
    found: List[CexRegion] = []

    def visit(pattern, A, c, cell, model):
        for cons in systems:
            stats.output_checks += 1
            hs = _substitute(cons, inputs, outputs, A, c)
            m = w.feasible_with(hs)
            if m is not None:
                omega = (tuple(tuple(frac(x) for x in row) for row in A), tuple(frac(x) for x in c))
                found.append(CexRegion(tuple(base) + tuple(cell), omega, pattern,
                                       tuple(frac(x) for x in m), q.index))
                return first_only
        return False

    w.walk(visit)
    found.sort(key=lambda r: r.pattern)
    return found


def generalize(net: Network, z0: Sequence, base: Sequence[HalfSpace] = (), query: int = 0) -> CexRegion:
    """Region of ``z0``'s activation pattern (intersected with ``base``)."""
    pat = net.pattern(z0)
    A, b, cell = net.local_affine(pat)
    omega = (tuple(tuple(row) for row in A), tuple(b))
    return CexRegion(tuple(base) + tuple(cell), omega, pat, tuple(frac(v) for v in z0), query)


class ExclusionBudget(RuntimeError):
    pass


def enumerate_by_exclusion(net: Network, q: NormalizedQuery, ranges: Mapping[str, Tuple], *,
                           single: Optional[Callable] = None,
                           stats: Optional[ReachStats] = None) -> List[CexRegion]:
    """Enumerate regions by repeatedly finding one counterexample and excluding its cell.

    ``single(extra)`` must return an input point satisfying the query inside
    ``extra`` or None.  The default runs the native traversal and stops at
    the first hit.  Remaining space ``S & !cell`` is split into the disjoint
    sub-problems ``S & h_1 & ... & h_{k-1} & !h_k``.
    """
    stats = stats if stats is not None else ReachStats()
    base = base_system(q, ranges)
    if single is None:
        def single(extra):
            rs = enumerate_regions(net, q, ranges, extra=extra, first_only=True, stats=stats)
            return rs[0].witness if rs else None
    guard = 2 ** net.n_relu
    regions: Dict[Tuple[bool, ...], CexRegion] = {}
    work: List[Tuple[HalfSpace, ...]] = [()]
    while work:
        extra = work.pop()
        stats.single_calls += 1
        z = single(list(extra))
        if z is None:
            continue
        r = generalize(net, z, base, q.index)
        if r.pattern not in regions:
            regions[r.pattern] = r
            if len(regions) > guard:
                raise ExclusionBudget("more than 2^N regions; exclusion is not making progress")
        cell = r.iota[len(base):]
        for k, (coeffs, rel, rhs) in enumerate(cell):
            work.append(tuple(extra) + tuple(cell[:k]) + ((coeffs, _FLIP[rel], rhs),))
        if stats.single_calls > 64 * guard + 64:
            raise ExclusionBudget("exclusion loop exceeded its iteration budget")
    return sorted(regions.values(), key=lambda r: r.pattern)
