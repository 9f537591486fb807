# -*- coding: utf-8 -*-
"""Command-line surface: sylab bubble|theta|torus

Exit codes are 0 on success, 1 on usage errors and 2 on numerical
failures. Human-readable text goes to stderr; with --json a single JSON
document is printed on stdout. Every file written under --out is listed
in its manifest.json.

"""

import os
import sys
import json
import time
import logging
import argparse
import datetime
import contextlib

from . import bubble, common, geometry, torus
from .common import SylabError, Stats

log = logging.getLogger("sylab.cli")

Success = 0
UsageFailure = 1
NumericalFailure = 2

ProfileColumns = "profile.csv columns: r,u,v (u upper, v lower component)"
FieldColumns = "field.csv columns: i,j,abs_psi (grid indices, |psi|)"
SweepColumns = "sweep.csv columns: " + ",".join(torus.SweepColumns)
CurvatureColumns = "curvature.csv columns: s,t,K"


class UsageError(ValueError):
    pass


@contextlib.contextmanager
def usage():
    """Report invalid arguments met while building inputs as usage errors"""
    try:
        yield
    except UsageError:
        raise
    except ValueError as e:
        raise UsageError(str(e))


class Parser(argparse.ArgumentParser):
    """ArgumentParser raising instead of exiting, so usage maps to 1"""

    def error(self, message):
        raise UsageError(message)


def _counters():
    return {
        "shoot_count": Stats.ShootCount,
        "inner_solve_count": Stats.InnerSolveCount,
        "exp_map_count": Stats.ExpMapCount,
    }


class RunManifest(object):
    """What a command read, wrote and was configured with"""

    def __init__(self, command, out):
        self.command = command
        self.out = out
        self.config = {}
        self.inputs = []
        self.outputs = []
        self.error = None
        self.counters = _counters()
        self.started = time.perf_counter()
        self.timestamp = datetime.datetime.now(
            datetime.timezone.utc).isoformat()

    def path(self, name):
        """Register an output file and return its full path"""
        if not os.path.isdir(self.out):
            os.makedirs(self.out)
        self.outputs.append(name)
        return os.path.join(self.out, name)

    def dump(self):
        return {
            "command": self.command,
            "config": self.config,
            "version": common.version(),
            "timestamp": self.timestamp,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time": time.perf_counter() - self.started,
            "error": self.error,
            "stats": self.stats(),
        }

    def stats(self):
        """Work done since the manifest was opened"""
        counters = _counters()
        data = {name: counters[name] - self.counters[name]
                for name in counters}
        data["last_timing_ms"] = Stats.LastTiming
        return data

    def write(self):
        if not os.path.isdir(self.out):
            os.makedirs(self.out)
        with open(os.path.join(self.out, "manifest.json"), "w") as f:
            json.dump(self.dump(), f, indent=2, sort_keys=True)


def _floats(text):
    try:
        return [float(value) for value in text.split(",") if value]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, "
                                         "got %r" % text)


def _writeJson(data, path):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)


def _summary(text, *args):
    sys.stderr.write(text % args + "\n")


# ----------------------
#
# Commands
#
# ----------------------


def cmdBubble(args, manifest):
    with usage():
        params = bubble.BubbleParams(lam=args.lam, p=args.p, S=args.S,
                                     r_max=args.r_max)
    manifest.config = params.dump()

    profile, report = bubble.findGroundState(params)
    bubble.saveProfile(profile, manifest.path("profile.csv"))
    bubble.saveReport(report, manifest.path("report.json"))

    payload = {"report": report.dump()}

    if args.collocate:
        _, oracle = bubble.collocate(params, guess=profile)
        bubble.saveReport(oracle, manifest.path("collocation.json"))
        payload["collocation"] = oracle.dump()
        payload["oracle_gap"] = abs(oracle.mu0 - report.mu0) / report.mu0

    _summary("mu0 = %.12g  v0* = %.12g  residual = %.3g", report.mu0,
             report.v0_star, report.residual_2d)

    return payload


def _defaultPoint(chart):
    return tuple(0.5 * (lo + hi) for lo, hi in chart.domain)


def cmdTheta(args, manifest):
    chart = geometry.loadChart(args.chart)
    manifest.config = {
        "chart": args.chart,
        "point": args.point,
        "angular": args.angular,
    }

    if args.profile:
        manifest.inputs.append(args.profile)
        profile = bubble.loadProfile(args.profile)
    else:
        profile, _ = bubble.findGroundState(bubble.BubbleParams())

    point = tuple(args.point) if args.point else _defaultPoint(chart)
    if len(point) != 2:
        raise UsageError("--point takes s,t, got %s" % (args.point,))

    curv = geometry.curvatureAt(chart, point)
    report = geometry.thetaAnsatz(curv.gauss, profile, angular=args.angular)
    report.point = point

    payload = {"chart": repr(chart), "theta": report.dump()}

    if args.full:
        full = geometry.thetaFull(curv, bubble.spinorField(profile))
        payload["theta_full"] = full.dump()

    if args.argmax:
        _, best = geometry.argmaxTheta(chart, profile, angular=args.angular)
        payload["argmax"] = best.dump()
        _summary("argmax at (%.10g, %.10g), K = %.10g, %d tied grid points",
                 best.point[0], best.point[1], best.K, len(best.ties))

    if args.curvature_csv:
        geometry.saveCurvatureField(chart, manifest.path("curvature.csv"),
                                    args.curvature_csv)

    if args.expansion:
        payload["expansion"] = [
            geometry.metricExpansionCheck(chart, point,
                                          quantity=quantity).dump()
            for quantity in ("metric", "volume")
        ]

    if args.volume:
        payload["volume"] = geometry.volumeExpansionTest(chart, point,
                                                         profile,
                                                         args.volume)

    _writeJson(payload, manifest.path("theta.json"))
    _summary("Theta = %.12g at (%.6g, %.6g), K = %.10g", report.theta,
             point[0], point[1], report.K)

    return payload


def _torusConfig(args):
    data = {}
    if args.config:
        with open(args.config) as f:
            data = json.load(f)

    config = torus.SolverConfig.load(data)
    data = config.dump()

    for name in ("eps", "a", "p", "seed", "tol_outer", "max_outer"):
        value = getattr(args, name)
        if value is not None:
            data[name] = value

    grid = data["grid"]
    if args.grid is not None:
        grid["N1"] = grid["N2"] = args.grid
    if args.L is not None:
        grid["L1"] = grid["L2"] = args.L
    if args.delta is not None:
        grid["delta"] = args.delta

    if args.L is not None or args.grid is not None:
        data["center"] = None

    return torus.SolverConfig.load(data)


def cmdTorus(args, manifest):
    with usage():
        config = _torusConfig(args)
    manifest.config = config.dump()
    if args.config:
        manifest.inputs.append(args.config)

    if args.sweep:
        rows = torus.sweepEps(args.sweep, config)
        torus.saveSweep(rows, manifest.path("sweep.csv"))
        _writeJson(rows, manifest.path("sweep.json"))

        failed = [row for row in rows if row["status"] != "OK"]
        for row in rows:
            _summary("eps = %-8g mu_eps = %.12g  %s", row["eps"],
                     row["mu_eps"], row["status"])

        if failed:
            error = SylabError("%d of %d sweep points failed" % (
                len(failed), len(rows)))
            error.code = failed[0]["status"]
            error.payload = {"sweep": rows}
            raise error

        return {"sweep": rows}

    try:
        result = torus.minimizeNehari(config)
    except SylabError as e:
        partial = getattr(e, "result", None)
        if partial is not None:
            torus.saveResult(partial, manifest.path("result.json"))
            torus.saveField(partial, manifest.path("field.csv"))
            e.payload = {"result": partial.dump()}
        raise

    torus.saveResult(result, manifest.path("result.json"))
    torus.saveField(result, manifest.path("field.csv"))

    _summary("mu_eps = %.12g  tau0 = %.6g  grad_norm = %.3g",
             result.mu_eps, result.tau0, result.grad_norm)

    return {"result": result.dump()}


# ----------------------
#
# Parser
#
# ----------------------


def makeParser():
    parser = Parser(
        prog="sylab",
        description=__doc__.split("\n")[0],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + common.version())

    shared = Parser(add_help=False)
    shared.add_argument("--out", default="out",
                        help="Output directory (default: out)")
    shared.add_argument("--json", action="store_true",
                        help="Print a JSON summary on stdout")
    shared.add_argument("--verbose", action="store_true",
                        help="Log at debug level on stderr")

    commands = parser.add_subparsers(dest="command", parser_class=Parser)
    commands.required = True

    sub = commands.add_parser("bubble", parents=[shared],
                              help="Planar ground state",
                              epilog=ProfileColumns)
    sub.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sub.add_argument("--p", type=float, default=3.0)
    sub.add_argument("--S", type=int, default=0)
    sub.add_argument("--r-max", dest="r_max", type=float, default=None)
    sub.add_argument("--collocate", action="store_true",
                     help="Cross-check with the relaxation solver")
    sub.set_defaults(func=cmdBubble)

    sub = commands.add_parser("theta", parents=[shared],
                              help="Curvature functional on a surface",
                              epilog=CurvatureColumns)
    sub.add_argument("--chart", default="sphere:1",
                     help="name:params (sphere, ellipsoid, torus, flat) or "
                          "a JSON chart file")
    sub.add_argument("--profile", default=None,
                     help="profile.csv from `sylab bubble`")
    sub.add_argument("--point", type=_floats, default=None,
                     help="s,t (default: centre of the chart)")
    sub.add_argument("--argmax", action="store_true")
    sub.add_argument("--angular", action="store_true",
                     help="Include the angular Riemann term")
    sub.add_argument("--full", action="store_true",
                     help="Also integrate Theta on a grid")
    sub.add_argument("--curvature-csv", dest="curvature_csv", type=int,
                     default=None, metavar="N")
    sub.add_argument("--expansion", action="store_true",
                     help="Normal-coordinate metric and volume checks")
    sub.add_argument("--volume", type=_floats, default=None,
                     metavar="EPS,...")
    sub.set_defaults(func=cmdTheta)

    sub = commands.add_parser("torus", parents=[shared],
                              help="Min-max solver on a flat torus",
                              epilog="\n".join([FieldColumns, SweepColumns]))
    sub.add_argument("--config", default=None, help="SolverConfig JSON")
    sub.add_argument("--eps", type=float, default=None)
    sub.add_argument("--a", type=float, default=None)
    sub.add_argument("--p", type=float, default=None)
    sub.add_argument("--grid", type=int, default=None, metavar="N")
    sub.add_argument("--L", type=float, default=None)
    sub.add_argument("--delta", type=_floats, default=None,
                     metavar="D1,D2")
    sub.add_argument("--seed", default=None, help="bubble or random:N")
    sub.add_argument("--tol-outer", dest="tol_outer", type=float,
                     default=None)
    sub.add_argument("--max-outer", dest="max_outer", type=int,
                     default=None)
    sub.add_argument("--sweep", type=_floats, default=None,
                     metavar="EPS,...")
    sub.set_defaults(func=cmdTorus)

    return parser


def _emit(data):
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def main(argv=None):
    try:
        args = makeParser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write("sylab: %s\n" % e)
        return UsageFailure

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )

    manifest = RunManifest(args.command, args.out)

    try:
        payload = args.func(args, manifest)

    except UsageError as e:
        sys.stderr.write("sylab %s: %s\n" % (args.command, e))
        if args.json:
            _emit({"error": "USAGE", "message": str(e)})
        return UsageFailure

    except (SylabError, ValueError) as e:
        # Any other ValueError comes from the numerics, not the arguments
        error = e if isinstance(e, SylabError) else \
            SylabError("%s: %s" % (type(e).__name__, e))

        manifest.error = error.dump()
        manifest.write()
        sys.stderr.write("sylab %s: %s\n" % (args.command, error))
        if args.json:
            data = error.dump()
            data.update(getattr(error, "payload", None) or {})
            _emit(data)
        return NumericalFailure

    manifest.write()
    if args.json:
        _emit(payload)

    return Success


if __name__ == "__main__":
    sys.exit(main())
