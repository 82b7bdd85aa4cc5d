"""Command line: ``mosaic-verify --nn NET --query Q`` and ``mosaic-verify replay ...``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import List, Optional

from ._rational import fmt, frac
from .driver import Options, Report, default_jobs, verify
from .network import Network, NetworkFormatError
from .parser import QuerySyntaxError, load

EXIT_USAGE = 3
EXIT_INTERNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _rational(text: str) -> Fraction:
    try:
        return frac(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError("not a rational number: %r" % text) from None


def _verify_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mosaic-verify",
                description="Verify a polynomial input-output property of a ReLU network. "
                            "Use 'mosaic-verify replay --help' for trajectory replay.")
    p.add_argument("--nn", required=True, help="network JSON file")
    p.add_argument("--query", required=True, help="query file")
    p.add_argument("--mode", choices=["falsify", "prove"], help="override the mode in the query file")
    p.add_argument("--approx", type=int, default=1, metavar="N", help="linear pieces per nonlinear term (default 1)")
    p.add_argument("--approx-eps", type=_rational, default=Fraction(1, 10 ** 6), metavar="E",
                   help="guard widening of the over-approximation (default 1/1000000)")
    p.add_argument("--approx-mode", choices=["overt", "interval"], default="overt")
    p.add_argument("--engine", choices=["native", "exclusion"], default="native")
    p.add_argument("--filter-timeout", type=float, default=4.0, metavar="S",
                   help="seconds per region for the nonlinear filter (default 4)")
    p.add_argument("--icp-max-boxes", type=int, default=100000, metavar="K",
                   help="box budget per nonlinear filter check (default 100000)")
    p.add_argument("--icp-min-width", type=_rational, default=Fraction(1, 2 ** 40), metavar="W",
                   help="relative box-size floor for splitting (default 2^-40)")
    p.add_argument("--exhaustive", action="store_true", help="visit every region instead of stopping at the first counterexample")
    p.add_argument("--jobs", type=int, default=None, metavar="K", help="worker processes (default: available CPUs)")
    p.add_argument("--report", metavar="FILE", help="write the JSON report here")
    p.add_argument("--dump-queries", metavar="DIR", help="write each normalized query as JSON")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
    return p


def _replay_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mosaic-verify replay", description="Closed-loop replay on a double integrator.")
    p.add_argument("--nn", required=True)
    p.add_argument("--plant", choices=["acc"], default="acc")
    p.add_argument("--T", type=_rational, default=Fraction(1, 10))
    p.add_argument("--A", type=_rational, default=Fraction(100))
    p.add_argument("--B", type=_rational, default=Fraction(100))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--init", metavar="R,RV", help="initial state")
    src.add_argument("--from-report", metavar="FILE", help="start from the first concrete region of a report")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--csv", metavar="FILE", help="write t,r,rv,a rows")
    return p


def _load_inputs(args):
    try:
        spec = load(args.query)
    except QuerySyntaxError as e:
        raise SystemExit(_fail("%s: %s" % (args.query, e)))
    try:
        net = Network.load(args.nn)
    except NetworkFormatError as e:
        raise SystemExit(_fail("%s: %s" % (args.nn, e)))
    return spec, net


def _fail(msg: str) -> int:
    print("mosaic-verify: error: %s" % msg, file=sys.stderr)
    return EXIT_USAGE


def run_verify(argv: List[str]) -> int:
    args = _verify_parser().parse_args(argv)
    try:
        spec, net = _load_inputs(args)
    except OSError as e:
        return _fail(str(e))
    if args.mode:
        spec = spec.with_mode(args.mode)
    opts = Options(approx=args.approx, approx_eps=args.approx_eps, approx_mode=args.approx_mode,
                   engine=args.engine, filter_timeout=args.filter_timeout, exhaustive=args.exhaustive,
                   icp_max_boxes=args.icp_max_boxes, icp_min_width=args.icp_min_width,
                   jobs=args.jobs or default_jobs(), dump_queries=args.dump_queries)
    if opts.approx < 1:
        return _fail("--approx must be at least 1")
    try:
        report = verify(spec, net, opts)
    except ValueError as e:
        return _fail(str(e))
    if args.report:
        with open(args.report, "wb") as fh:
            fh.write(report.emit("json"))
    sys.stdout.write(report.emit("json" if args.json else "text").decode())
    return report.exit_code


def run_replay(argv: List[str]) -> int:
    from .replay import PlantConfig, replay_region, simulate

    args = _replay_parser().parse_args(argv)
    try:
        net = Network.load(args.nn)
    except (OSError, NetworkFormatError) as e:
        return _fail(str(e))
    try:
        cfg = PlantConfig(args.T, args.A, args.B)
    except ValueError as e:
        return _fail(str(e))
    if args.steps < 1:
        return _fail("--steps must be at least 1")
    if args.init:
        try:
            init = [frac(x) for x in args.init.split(",")]
        except (ValueError, ZeroDivisionError):
            return _fail("--init expects two rationals like 2,-10")
        if len(init) != 2:
            return _fail("--init expects two rationals like 2,-10")
        traj = simulate(net, cfg, init, args.steps)
    else:
        with open(args.from_report) as fh:
            rep = Report.from_json(fh.read())
        if not rep.regions:
            return _fail("report has no regions")
        cands = rep.concrete() or rep.regions
        r = cands[0]
        traj = replay_region(net, cfg, r.witness, args.steps, r.outcome)
    if args.csv:
        traj.write_csv(args.csv)
    print("control decisions: %d" % len(traj.points))
    if traj.final is not None:
        t, r, rv = traj.final
        print("final state: t=%s r=%s rv=%s" % (fmt(t), fmt(r), fmt(rv)))
    if traj.crashed:
        lo, hi = traj.crash_time
        print("crash (r <= 0) at t in [%s, %s] (~%.6f s)" % (fmt(lo), fmt(hi), float((lo + hi) / 2)))
    else:
        print("no crash")
    if traj.note:
        print(traj.note)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "replay":
            return run_replay(argv[1:])
        if argv and argv[0] == "verify":
            argv = argv[1:]
        return run_verify(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except KeyboardInterrupt:  # pragma: no cover
        return 130
    except Exception:  # pragma: no cover - reported, not swallowed
        import traceback
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
