"""End-to-end verification: linearize, decompose, enumerate regions, filter."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ._rational import fmt, frac
from .filter import (DEFAULT_TIMEOUT, Concrete, FilterStats, Spurious, Undecided,
                     check_region)
from .formula import QuerySpec, atoms_of
from .linearize import DEFAULT_EPS, augment
from .mosaic import Decomposer, NormalizedQuery
from .network import Network
from .theory.icp import DEFAULT_MAX_BOXES, DEFAULT_MIN_WIDTH
from .reach import CexRegion, ReachStats, enumerate_by_exclusion, enumerate_regions

SAFE, UNSAFE, UNKNOWN = "safe", "unsafe", "unknown"
EXIT_CODES = {SAFE: 0, UNSAFE: 1, UNKNOWN: 2}


@dataclass
class Options:
    approx: int = 1
    approx_eps: Fraction = DEFAULT_EPS
    approx_mode: str = "overt"
    engine: str = "native"
    filter_timeout: float = DEFAULT_TIMEOUT
    icp_max_boxes: int = DEFAULT_MAX_BOXES
    icp_min_width: Fraction = DEFAULT_MIN_WIDTH
    exhaustive: bool = False
    jobs: int = 1
    dump_queries: Optional[str] = None


@dataclass
class RegionReport:
    iota: Tuple[Tuple[Tuple[Fraction, ...], ...], Tuple[str, ...], Tuple[Fraction, ...]]
    omega: Tuple[Tuple[Tuple[Fraction, ...], ...], Tuple[Fraction, ...]]
    witness: Tuple[Fraction, ...]
    outcome: str
    query: int = 0
    pattern: str = ""
    outputs: Optional[Tuple[Fraction, ...]] = None
    reason: str = ""

    @staticmethod
    def from_region(r: CexRegion, outcome) -> "RegionReport":
        A = tuple(h[0] for h in r.iota)
        rel = tuple(h[1] for h in r.iota)
        b = tuple(h[2] for h in r.iota)
        witness = r.witness
        outputs = None
        if isinstance(outcome, Concrete):
            witness, outputs = outcome.witness, outcome.outputs
        return RegionReport((A, rel, b), r.omega, tuple(witness), outcome.name, r.query,
                            r.pattern_bits(), outputs, getattr(outcome, "reason", ""))

    def to_json(self) -> dict:
        A, rel, b = self.iota
        d = {
            "iota": {"A": [[fmt(x) for x in row] for row in A], "relations": list(rel),
                     "b": [fmt(x) for x in b]},
            "omega": {"A": [[fmt(x) for x in row] for row in self.omega[0]],
                      "b": [fmt(x) for x in self.omega[1]]},
            "witness": [fmt(x) for x in self.witness],
            "outcome": self.outcome,
            "query": self.query,
            "pattern": self.pattern,
        }
        if self.outputs is not None:
            d["outputs"] = [fmt(x) for x in self.outputs]
        if self.reason:
            d["reason"] = self.reason
        return d

    @staticmethod
    def from_json(d: dict) -> "RegionReport":
        A = tuple(tuple(frac(x) for x in row) for row in d["iota"]["A"])
        iota = (A, tuple(d["iota"]["relations"]), tuple(frac(x) for x in d["iota"]["b"]))
        omega = (tuple(tuple(frac(x) for x in row) for row in d["omega"]["A"]),
                 tuple(frac(x) for x in d["omega"]["b"]))
        outputs = tuple(frac(x) for x in d["outputs"]) if "outputs" in d else None
        return RegionReport(iota, omega, tuple(frac(x) for x in d["witness"]), d["outcome"],
                            d.get("query", 0), d.get("pattern", ""), outputs, d.get("reason", ""))

    def contains(self, z: Sequence) -> bool:
        A, rel, b = self.iota
        for row, r, c in zip(A, rel, b):
            v = sum((a * frac(x) for a, x in zip(row, z)), Fraction(0))
            if not {"<=": v <= c, ">=": v >= c, "<": v < c, ">": v > c, "=": v == c}[r]:
                return False
        return True


@dataclass
class Report:
    verdict: str
    regions: List[RegionReport] = field(default_factory=list)
    stats: Dict[str, object] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def concrete(self) -> List[RegionReport]:
        return [r for r in self.regions if r.outcome == "concrete"]

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "regions": [r.to_json() for r in self.regions],
                "stats": dict(self.stats)}

    @staticmethod
    def from_json(d) -> "Report":
        if isinstance(d, (str, bytes)):
            d = json.loads(d)
        return Report(d["verdict"], [RegionReport.from_json(r) for r in d["regions"]], dict(d["stats"]))

    def emit(self, format: str = "json") -> bytes:
        if format == "json":
            return (json.dumps(self.to_json(), indent=2) + "\n").encode()
        if format == "text":
            return self.text().encode()
        raise ValueError("unknown report format %r" % format)

    def text(self) -> str:
        s = self.stats
        lines = ["verdict: %s" % self.verdict,
                 "azulejos %s, queries %s, stars %s, regions %d (concrete %d, spurious %s, unknown %s)"
                 % (s.get("azulejos"), s.get("queries"), s.get("stars"), len(self.regions),
                    len(self.concrete()), s.get("spurious"), s.get("unknown"))]
        if s.get("first_ce_seconds") is not None:
            lines.append("first counterexample after %.2f s" % s["first_ce_seconds"])
        for r in self.concrete()[:10]:
            lines.append("  counterexample at (%s) -> (%s)  [query %d, pattern %s]"
                         % (", ".join(fmt(x) for x in r.witness),
                            ", ".join(fmt(x) for x in (r.outputs or ())), r.query, r.pattern or "-"))
        if len(self.concrete()) > 10:
            lines.append("  ... %d more" % (len(self.concrete()) - 10))
        ph = s.get("phase_seconds") or {}
        lines.append("time: " + ", ".join("%s %.2fs" % kv for kv in ph.items()))
        return "\n".join(lines) + "\n"


def _process_query(spec: QuerySpec, net: Network, q: NormalizedQuery, exact_atoms, opts: Options,
                   stop_at_concrete: bool):
    """Regions of one query with their filter outcomes (runs in workers too)."""
    rstats = ReachStats()
    fstats = FilterStats()
    t0 = time.monotonic()
    if opts.engine == "exclusion":
        regions = enumerate_by_exclusion(net, q, spec.ranges, stats=rstats)
    else:
        regions = enumerate_regions(net, q, spec.ranges, stats=rstats)
    t1 = time.monotonic()
    out = []
    for r in regions:
        res = check_region(spec, net, q, r, exact_atoms=exact_atoms, timeout=opts.filter_timeout,
                           max_boxes=opts.icp_max_boxes, min_width=opts.icp_min_width, stats=fstats)
        out.append(RegionReport.from_region(r, res))
        if stop_at_concrete and isinstance(res, Concrete):
            break
    return q.index, out, rstats, fstats, t1 - t0, time.monotonic() - t1


def verify(spec: QuerySpec, net: Network, opts: Optional[Options] = None) -> Report:
    opts = opts or Options()
    if len(spec.inputs) != net.n_inputs or len(spec.outputs) != net.n_outputs:
        raise ValueError("query declares %d inputs and %d outputs but the network has %d and %d"
                         % (len(spec.inputs), len(spec.outputs), net.n_inputs, net.n_outputs))
    start = time.monotonic()
    phases = {"linearize": 0.0, "decompose": 0.0, "reach": 0.0, "filter": 0.0}
    aug = augment(spec.target(), spec.ranges, opts.approx, opts.approx_eps, opts.approx_mode)
    exact_atoms = frozenset(atoms_of(aug.base))
    phases["linearize"] = time.monotonic() - start
    dec = Decomposer(aug.formula, spec)
    dump = Path(opts.dump_queries) if opts.dump_queries else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)
    fail_fast = not opts.exhaustive
    results: Dict[int, list] = {}
    totals = {"stars": 0, "lp_calls": 0, "icp_calls": 0, "spurious": 0, "unknown": 0}
    first_ce = [None]

    def absorb(res):
        idx, regs, rst, fst, t_reach, t_filter = res
        results[idx] = regs
        totals["stars"] += rst.stars
        totals["lp_calls"] += rst.lp_calls + fst.lp_calls
        totals["icp_calls"] += fst.icp_calls
        totals["spurious"] += fst.spurious
        totals["unknown"] += fst.unknown
        phases["reach"] += t_reach
        phases["filter"] += t_filter
        if fst.concrete and first_ce[0] is None:
            first_ce[0] = time.monotonic() - start
        return fst.concrete > 0

    def queries():
        for q in dec.run():
            if dump:
                (dump / ("query_%03d.json" % q.index)).write_text(json.dumps(q.to_json(), indent=2))
            yield q

    jobs = max(1, opts.jobs or 1)
    stop = False
    if jobs == 1:
        for q in queries():
            if absorb(_process_query(spec, net, q, exact_atoms, opts, fail_fast)) and fail_fast:
                stop = True
                break
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pending = set()
            for q in queries():
                pending.add(pool.submit(_process_query, spec, net, q, exact_atoms, opts, fail_fast))
                done = {f for f in pending if f.done()}
                pending -= done
                for f in done:
                    stop = absorb(f.result()) and fail_fast or stop
                if stop:
                    break
            while pending and not stop:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for f in done:
                    stop = absorb(f.result()) and fail_fast or stop
            for f in pending:
                f.cancel()
    mstats = dec.stats
    phases["decompose"] = max(0.0, mstats.seconds - phases["reach"] - phases["filter"]) if jobs == 1 \
        else mstats.seconds
    regions = [r for idx in sorted(results) for r in results[idx]]
    if any(r.outcome == "concrete" for r in regions):
        verdict = UNSAFE
    elif any(r.outcome == "unknown" for r in regions):
        verdict = UNKNOWN
    else:
        verdict = SAFE
    phases["total"] = time.monotonic() - start
    stats = {
        "azulejos": mstats.azulejos,
        "queries": mstats.queries,
        "stars": totals["stars"],
        "lp_calls": totals["lp_calls"] + mstats.lp_calls,
        "icp_calls": totals["icp_calls"] + mstats.icp_calls,
        "spurious": totals["spurious"],
        "unknown": totals["unknown"],
        "first_ce_seconds": first_ce[0],
        "phase_seconds": {k: round(v, 4) for k, v in phases.items()},
        "stopped_early": stop,
        "mosaic_icp_unknown": mstats.icp_unknown,
    }
    return Report(verdict, regions, stats)


def default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - not on Linux
        return os.cpu_count() or 1
