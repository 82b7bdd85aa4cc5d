"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL line.

Run it under pytest (the lines appear in the terminal summary) or directly:

    python3 tests/test_acceptance.py
"""
import functools
import itertools
import os
import random
import sys
import time
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from mosaicverify.driver import Options, verify  # noqa: E402
from mosaicverify.filter import Concrete, Spurious, bounding_box, check_region  # noqa: E402
from mosaicverify.formula import atoms_of, evaluate  # noqa: E402
from mosaicverify.linearize import NotApplicable, approximate_catom, augment, max_upper_bound  # noqa: E402
from mosaicverify.mosaic import decompose  # noqa: E402
from mosaicverify.poly import Poly  # noqa: E402
from mosaicverify.reach import enumerate_by_exclusion, enumerate_regions  # noqa: E402
from mosaicverify.replay import PlantConfig, replay_region  # noqa: E402

from conftest import FIXTURE_PAIRS, fixture_net, fixture_spec  # noqa: E402
from oracles import (fm_feasible, grid, grid_verdict, oracle_verdict, random_instance,  # noqa: E402
                     sample_box, sample_state)

RESULTS = {}
QNAMES = sorted({q for q, _ in FIXTURE_PAIRS})


def _record(n, ok, detail):
    RESULTS[n] = (ok, detail)
    return ok, detail


def report_lines():
    return ["criterion %d: %s  %s" % (n, "PASS" if ok else "FAIL", detail)
            for n, (ok, detail) in sorted(RESULTS.items())]


@functools.lru_cache(maxsize=None)
def _decomposed(qname):
    spec = fixture_spec(qname)
    aug = augment(spec.target(), spec.ranges)
    return spec, aug, decompose(aug.formula, spec)


def _sat(spec, net, z):
    st = dict(zip(spec.inputs, z))
    st.update(zip(spec.outputs, net.evaluate(z)))
    return spec.in_ranges(st) and evaluate(spec.target(), st)


# ---------------------------------------------------------------------------

def criterion_1(n=100):
    t0 = time.monotonic()
    mismatches, unknown = [], 0
    for seed in range(n):
        spec, net = random_instance(seed)
        got = verify(spec, net, Options(jobs=1)).verdict
        if got == "unknown":
            unknown += 1
            continue
        want = oracle_verdict(spec, net)
        if want != "unknown" and want != got:
            mismatches.append(seed)
    secs = time.monotonic() - t0
    ok = not mismatches and unknown < 0.05 * n and secs < 600
    return _record(1, ok, "%d instances, mismatches %s, unknown %d, %.0f s" % (n, mismatches or 0, unknown, secs))


def criterion_2(samples=10 ** 4):
    bad = 0
    for qname in QNAMES:
        spec, aug, qs = _decomposed(qname)
        rng = random.Random(qname)
        for _ in range(samples):
            s = sample_state(rng, spec)
            if evaluate(aug.formula, s) != any(q.holds(s) for q in qs):
                bad += 1
    return _record(2, bad == 0, "%d fixtures x %d samples, mismatches %d" % (len(QNAMES), samples, bad))


def criterion_3():
    violations, pairs = 0, 0
    for qname in QNAMES:
        spec, _, qs = _decomposed(qname)
        for a, b in itertools.combinations(qs, 2):
            pairs += 1
            if fm_feasible(a.input_system() + b.input_system(), list(spec.inputs)):
                violations += 1
    return _record(3, violations == 0, "%d azulejo pairs, violations %d" % (pairs, violations))


def _affine(rng, names):
    return Poly.linear({v: F(rng.randint(-6, 6), rng.randint(1, 3)) for v in names}, F(rng.randint(-6, 6)))


def criterion_4(samples=10 ** 4, bound_samples=10 ** 3):
    unsound, unequal, atoms = 0, 0, 0
    for qname in QNAMES:
        spec, aug, _ = _decomposed(qname)
        rng = random.Random("lin" + qname)
        box = {v: spec.ranges[v] for v in spec.variables()}
        pts = [sample_box(rng, box, 10 ** 4) for _ in range(samples)]
        unequal += sum(evaluate(aug.formula, s) != evaluate(spec.target(), s) for s in pts)
        for a in atoms_of(aug.base):
            if a.is_linear():
                continue
            atoms += 1
            ap = approximate_catom(a, box, 1)
            for s in pts:
                holds = a.holds(s)
                if (holds and not evaluate(ap.over, s)) or (evaluate(ap.under, s) and not holds):
                    unsound += 1
    # max-bound lemma on random affine pairs
    rng = random.Random(4)
    bound_fail, pairs = 0, 0
    names = ["u", "w"]
    while pairs < 20:
        box = {}
        for v in names:
            lo = F(rng.randint(-5, 4))
            box[v] = (lo, lo + rng.randint(1, 4))
        f, g = _affine(rng, names), _affine(rng, names)
        r = max_upper_bound(f, g, box)
        if isinstance(r, NotApplicable):
            continue
        pairs += 1
        h = r.bound(f, g)
        if h.evaluate(r.x_f) != f.evaluate(r.x_f) or h.evaluate(r.x_g) != g.evaluate(r.x_g):
            bound_fail += 1
        for _ in range(bound_samples // 20):
            pt = sample_box(rng, box, 1000)
            if h.evaluate(pt) < max(f.evaluate(pt), g.evaluate(pt)):
                bound_fail += 1
    ok = unsound == 0 and unequal == 0 and bound_fail == 0
    return _record(4, ok, "%d nonlinear atoms: unsound %d, p/p_o differ %d; max bound failures %d"
                   % (atoms, unsound, unequal, bound_fail))


def criterion_5():
    spec = fixture_spec("acc.txt")
    notes, ok = [], True
    t = time.monotonic()
    brake = verify(spec, fixture_net("acc_brake.json"), Options(jobs=1))
    tb = time.monotonic() - t
    ok &= brake.verdict == "safe" and tb < 60
    notes.append("brake %s %.0fs" % (brake.verdict, tb))
    net = fixture_net("acc_accelerate.json")
    t = time.monotonic()
    acc = verify(spec, net, Options(jobs=1))
    ta = time.monotonic() - t
    crashed = bool(acc.concrete()) and replay_region(net, PlantConfig(), acc.concrete()[0].witness, 100).crashed
    ok &= acc.verdict == "unsafe" and crashed and ta < 60
    notes.append("accelerate %s %.0fs replay crash %s" % (acc.verdict, ta, crashed))
    rnet = fixture_net("acc_random_2x16.json")
    t = time.monotonic()
    rnd = verify(spec, rnet, Options(jobs=1))
    tr = time.monotonic() - t
    ok &= rnd.verdict in ("safe", "unsafe") and tr < 300
    full = verify(spec, rnet, Options(jobs=1, exhaustive=True))
    cex = grid_verdict(spec, rnet, 200)
    conc = full.concrete()
    missed = sum(1 for z in cex if not any(r.contains(z) for r in conc))
    ok &= missed == 0
    notes.append("random 2x16 %s %.0fs, grid cex %d missed %d" % (rnd.verdict, tr, len(cex), missed))
    return _record(5, bool(ok), "; ".join(notes))


def criterion_6():
    _, _, qs = _decomposed("acc.txt")
    return _record(6, len(qs) <= 200, "ACC at N=1: %d normalized queries" % len(qs))


def _grid_points(spec, per_axis=200):
    return list(grid(spec, per_axis))


def criterion_7():
    bad, checked = 0, 0
    for qname, nname in FIXTURE_PAIRS:
        spec, _, qs = _decomposed(qname)
        net = fixture_net(nname)
        native, excl = [], []
        for q in qs:
            native += enumerate_regions(net, q, spec.ranges)
            excl += enumerate_by_exclusion(net, q, spec.ranges)
        for z in _grid_points(spec):
            checked += 1
            if any(r.contains(z) for r in native) != any(r.contains(z) for r in excl):
                bad += 1
    return _record(7, bad == 0, "%d grid points over %d fixtures, disagreements %d"
                   % (checked, len(FIXTURE_PAIRS), bad))


def _has_nonlinear(spec):
    return any(not a.is_linear() for a in atoms_of(spec.target()))


def criterion_8(samples=10 ** 4):
    bad_wit, bad_sp, nconc, nsp = 0, 0, 0, 0
    for qname, nname in FIXTURE_PAIRS:
        spec, aug, qs = _decomposed(qname)
        if not _has_nonlinear(spec):
            continue
        net = fixture_net(nname)
        exact = frozenset(atoms_of(aug.base))
        rng = random.Random("filter" + qname + nname)
        for q in qs:
            for r in enumerate_regions(net, q, spec.ranges):
                res = check_region(spec, net, q, r, exact_atoms=exact)
                if isinstance(res, Concrete):
                    nconc += 1
                    if not (r.contains(res.witness) and _sat(spec, net, res.witness)
                            and tuple(net.evaluate(res.witness)) == res.outputs):
                        bad_wit += 1
                elif isinstance(res, Spurious):
                    nsp += 1
                    box = bounding_box(r, spec.inputs, spec.ranges)
                    for _ in range(samples):
                        pt = sample_box(rng, box, 10 ** 6)
                        z = [pt[v] for v in spec.inputs]
                        if r.contains(z) and _sat(spec, net, z):
                            bad_sp += 1
                            break
    ok = bad_wit == 0 and bad_sp == 0
    return _record(8, ok, "%d concrete (bad witnesses %d), %d spurious (non-empty %d)"
                   % (nconc, bad_wit, nsp, bad_sp))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8]


@pytest.mark.acceptance
@pytest.mark.parametrize("n", range(1, 9))
def test_criterion(n):
    ok, detail = CRITERIA[n - 1]()
    print("criterion %d: %s  %s" % (n, "PASS" if ok else "FAIL", detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print("criterion %d: %s  %s" % (max(RESULTS), "PASS" if ok else "FAIL", detail), flush=True)
    sys.exit(1 if failed else 0)
