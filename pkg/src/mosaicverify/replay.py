"""Closed-loop replay of a network controller on a double-integrator plant.

The plant is ``r' = rv, rv' = -a`` with ``a`` held for one control period.
Within a period the state follows the exact closed form, so crashes
(``r <= 0``) are detected from the minimum of a quadratic, never by sampling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Protocol, Sequence, Tuple

from ._rational import frac
from .network import Network


@dataclass(frozen=True)
class PlantConfig:
    T: Fraction = Fraction(1, 10)
    A: Fraction = Fraction(100)
    B: Fraction = Fraction(100)

    def __post_init__(self):
        object.__setattr__(self, "T", frac(self.T))
        object.__setattr__(self, "A", frac(self.A))
        object.__setattr__(self, "B", frac(self.B))
        if self.T <= 0:
            raise ValueError("control period must be positive")
        if not -self.B < self.A:
            raise ValueError("need -B < A")

    def clamp(self, a: Fraction) -> Fraction:
        return min(max(a, -self.B), self.A)


class Plant(Protocol):
    def advance(self, state: Tuple[Fraction, ...], a: Fraction, t: Fraction) -> Tuple[Fraction, ...]: ...

    def first_crash(self, state, a, T) -> Optional[Tuple[Fraction, Fraction]]: ...


class DoubleIntegrator:
    """``r(t) = r0 + rv0 t - a t^2 / 2`` and ``rv(t) = rv0 - a t``."""

    @staticmethod
    def advance(state, a, t):
        r, rv = state
        return r + rv * t - a * t * t / 2, rv - a * t

    @staticmethod
    def min_position(state, a, T) -> Fraction:
        r, rv = state
        cands = [r, DoubleIntegrator.advance(state, a, T)[0]]
        if a < 0:  # convex in t: the vertex rv/a may lie inside the period
            tv = rv / a
            if 0 < tv < T:
                cands.append(DoubleIntegrator.advance(state, a, tv)[0])
        return min(cands)

    @staticmethod
    def first_crash(state, a, T, width=Fraction(1, 10 ** 12)):
        """Rational interval around the first ``t`` in ``[0, T]`` with ``r(t) <= 0``, or None."""
        r, _ = state
        if r <= 0:
            return Fraction(0), Fraction(0)
        if DoubleIntegrator.min_position(state, a, T) > 0:
            return None
        # {t : r(t) > 0} meets [0, hi] in an interval containing 0, where hi
        # is the vertex of a convex r (or T), so bisection isolates the crossing
        rv = state[1]
        hi = T
        if a < 0 and 0 < rv / a < T:
            hi = rv / a
        lo = Fraction(0)
        while hi - lo > width:
            mid = (lo + hi) / 2
            if DoubleIntegrator.advance(state, a, mid)[0] > 0:
                lo = mid
            else:
                hi = mid
        return lo, hi


@dataclass
class Trajectory:
    points: List[Tuple[Fraction, Fraction, Fraction, Fraction]] = field(default_factory=list)
    final: Optional[Tuple[Fraction, Fraction, Fraction]] = None  # (t, r, rv) after the last period
    crashed: bool = False
    crash_time: Optional[Tuple[Fraction, Fraction]] = None
    verified: bool = True
    note: str = ""

    def write_csv(self, path):
        """One row per control decision; the end state follows with an empty ``a``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", "rv", "a"])
            for t, r, rv, a in self.points:
                w.writerow([repr(float(t)), repr(float(r)), repr(float(rv)), repr(float(a))])
            if self.final is not None:
                t, r, rv = self.final
                w.writerow([repr(float(t)), repr(float(r)), repr(float(rv)), ""])


def simulate(net: Network, cfg: PlantConfig, initial: Sequence, steps: int,
             plant=DoubleIntegrator) -> Trajectory:
    """Run ``steps`` control periods from ``initial = (r, rv)``; stops at the first crash.

    ``points`` holds one entry per control decision.  A crashing run has no
    ``final`` state.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    state = tuple(frac(v) for v in initial)
    traj = Trajectory()
    t = Fraction(0)
    for _ in range(steps):
        a = cfg.clamp(frac(net.evaluate(state)[0]))
        traj.points.append((t, state[0], state[1], a))
        hit = plant.first_crash(state, a, cfg.T)
        if hit is not None:
            traj.crashed = True
            traj.crash_time = (t + hit[0], t + hit[1])
            return traj
        state = plant.advance(state, a, cfg.T)
        t += cfg.T
    traj.final = (t, state[0], state[1])
    return traj


def replay_region(net: Network, cfg: PlantConfig, witness: Sequence, steps: int,
                  outcome: str = "concrete") -> Trajectory:
    """Simulate from a region's witness; non-concrete regions are labelled as such."""
    traj = simulate(net, cfg, witness, steps)
    if outcome != "concrete":
        traj.verified = False
        traj.note = "not a verified violation (region outcome: %s)" % outcome
    return traj


def crash_time_float(traj: Trajectory) -> Optional[float]:
    if traj.crash_time is None:
        return None
    return float((traj.crash_time[0] + traj.crash_time[1]) / 2)

