"""Concrete-or-spurious decision for a counterexample region.

Inside a region the network is the affine map ``omega``, so substituting
``omega`` for the outputs turns the query into a formula over the inputs
alone.  Each nonlinear term of the query is checked on its own; linear
systems go to the exact LP, the rest to ICP.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Collection, Dict, List, Mapping, Optional, Sequence, Tuple

from ._rational import frac
from .formula import QuerySpec, evaluate
from .mosaic import NormalizedQuery, lit_poly_constraint
from .network import Network
from .poly import Poly
from .reach import CexRegion
from .theory.icp import DEFAULT_MAX_BOXES, DEFAULT_MIN_WIDTH, icp_check
from .theory.simplex import InfeasibleInput, Unknown, lp_extremum, lp_feasible

DEFAULT_TIMEOUT = 4.0


@dataclass(frozen=True)
class Concrete:
    witness: Tuple[Fraction, ...]
    outputs: Tuple[Fraction, ...]
    name = "concrete"


@dataclass(frozen=True)
class Spurious:
    name = "spurious"


@dataclass(frozen=True)
class Undecided:
    reason: str = ""
    name = "unknown"


@dataclass
class FilterStats:
    regions: int = 0
    lp_calls: int = 0
    icp_calls: int = 0
    concrete: int = 0
    spurious: int = 0
    unknown: int = 0


Eta = List[Tuple[Poly, str]]  # conjunction of ``poly rel 0`` over the inputs


def _omega_polys(region: CexRegion, inputs: Sequence[str], outputs: Sequence[str]) -> Dict[str, Poly]:
    A, b = region.omega
    return {x: Poly.linear({z: a for z, a in zip(inputs, row) if a}, c)
            for x, row, c in zip(outputs, A, b)}


def _halfspace_poly(h, inputs) -> Tuple[Poly, str]:
    coeffs, rel, rhs = h
    p = Poly.linear({z: a for z, a in zip(inputs, coeffs) if a}, -rhs)
    return p, rel


def build_eta(q: NormalizedQuery, region: CexRegion, ranges: Mapping[str, Tuple],
              exact_atoms: Optional[Collection] = None) -> List[Eta]:
    """One input-only conjunction per nonlinear term of ``q``.

    The disjunction of the result is ``q_l & q_n & z in iota & x = omega(z)``
    (with output ranges).  Literals over atoms outside ``exact_atoms`` (the
    linearization's helper atoms) are dropped.
    """
    inputs, outputs = list(q.inputs), list(q.outputs)
    sub = _omega_polys(region, inputs, outputs)
    common: Eta = [_halfspace_poly(h, inputs) for h in region.iota]
    for x in outputs:
        lo, hi = ranges[x]
        common.append((sub[x] - frac(lo), ">="))
        common.append((sub[x] - frac(hi), "<="))
    for l in q.azulejo:
        p, rel = lit_poly_constraint(l)
        common.append((p, rel))
    out: List[Eta] = []
    seen = set()
    for term in q.nonlinear_dnf:
        eta = list(common)
        for l in term:
            if exact_atoms is not None and l.atom not in exact_atoms:
                continue
            p, rel = lit_poly_constraint(l)
            p = p.substitute(sub)
            eta.append((p, rel))
        key = frozenset(eta)
        if key not in seen:
            seen.add(key)
            out.append(eta)
    return out


def _is_linear(eta: Eta) -> bool:
    return all(p.degree() <= 1 for p, _ in eta)


def _lin(eta: Eta):
    return [(dict(p.linear_coeffs()), rel, -p.constant()) for p, rel in eta]


def bounding_box(region: CexRegion, inputs: Sequence[str], ranges: Mapping[str, Tuple]):
    """Tightest box around ``iota`` (closure), clipped to the input ranges."""
    cons = [({z: a for z, a in zip(inputs, h[0]) if a}, h[1], h[2]) for h in region.iota]
    box = {}
    for z in inputs:
        lo, hi = frac(ranges[z][0]), frac(ranges[z][1])
        try:
            l = lp_extremum({z: 1}, cons, "min", variables=inputs)
            h = lp_extremum({z: 1}, cons, "max", variables=inputs)
        except InfeasibleInput:
            return None
        if l != "unbounded":
            lo = max(lo, l)
        if h != "unbounded":
            hi = min(hi, h)
        if lo > hi:
            return None
        box[z] = (lo, hi)
    return box


def verify_witness(spec: QuerySpec, net: Network, z: Sequence) -> Optional[Tuple[Fraction, ...]]:
    """Outputs ``net(z)`` if ``(z, net(z))`` satisfies the original query within ranges."""
    x = net.evaluate(z)
    state = dict(zip(spec.inputs, z))
    state.update(zip(spec.outputs, x))
    if spec.in_ranges(state) and evaluate(spec.target(), state):
        return tuple(x)
    return None


def check_region(spec: QuerySpec, net: Network, q: NormalizedQuery, region: CexRegion, *,
                 exact_atoms: Optional[Collection] = None, timeout: float = DEFAULT_TIMEOUT,
                 max_boxes: int = DEFAULT_MAX_BOXES, min_width: Fraction = DEFAULT_MIN_WIDTH,
                 stats: Optional[FilterStats] = None):
    """Concrete(witness), Spurious() or Undecided(reason) for ``region``."""
    stats = stats if stats is not None else FilterStats()
    stats.regions += 1
    deadline = time.monotonic() + timeout
    inputs = list(q.inputs)
    etas = build_eta(q, region, spec.ranges, exact_atoms)
    # purely linear systems first: they are decided exactly and cheaply
    etas.sort(key=lambda e: not _is_linear(e))
    box = None
    undecided = None
    for eta in etas:
        if _is_linear(eta):
            stats.lp_calls += 1
            r = lp_feasible(_lin(eta), inputs)
            if not r:
                continue
            z = tuple(r.witness[v] for v in inputs)
        else:
            if box is None:
                box = bounding_box(region, inputs, spec.ranges)
                if box is None:
                    break
            stats.icp_calls += 1
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                undecided = undecided or "filter timeout"
                continue
            r = icp_check(eta, box, max_boxes=max_boxes, min_width=min_width,
                          deadline=time.monotonic() + remaining)
            if isinstance(r, Unknown):
                undecided = r.reason or "icp unknown"
                continue
            if not r:
                continue
            z = tuple(r.witness[v] for v in inputs)
        x = verify_witness(spec, net, z)
        if x is not None:
            stats.concrete += 1
            return Concrete(z, x)
        undecided = "witness failed re-verification"  # pragma: no cover - defensive
    if undecided:
        stats.unknown += 1
        return Undecided(undecided)
    stats.spurious += 1
    return Spurious()
