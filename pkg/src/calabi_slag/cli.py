"""Command-line front end.

Exit codes: 0 success, 1 other numerical failure, 2 no Kahler solution or
no root, 3 flow blow-up (last state written), 4 bundle branch left the
window, 64 usage error, 74 I/O error.
"""

from __future__ import annotations

import argparse
import cmath
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import csvio
from .bundles import (
    BundleParams,
    boundary_intersections,
    in_smallness_window,
    monotonicity_record,
    near_nongeneric,
    negative_case,
    trace_vertical_branch,
    vertical_branch_thetas,
)
from .construction import construct, construct_from_p, find_admissible_k, solve_critical_data
from .errors import BlowUp, BranchEscapesWindow, CalabiSlagError, NoRoot, NotKahler
from .flow import FlowConfig, stable_relaxation_experiment, unstable_limit_experiment
from .levelset import HarmonicLevelSet, TraceConfig, as_window, trace_all
from .stability import wall_scan, write_wall_scan
from .svg import SvgPlot

OUTDIR_ENV = "CALABI_SLAG_OUTDIR"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_SOLUTION = 2
EXIT_BLOWUP = 3
EXIT_ESCAPE = 4
EXIT_USAGE = 64
EXIT_IO = 74

EPILOG = f"""\
CSV schemas (header line, 17 significant digits, booleans as true/false):
  params    field,value
  levelset  PREFIX.csv: component,x,y   PREFIX_tangents.csv: component,x,y
  wall      b,ReZ1,ImZ1,ReZ2,ImZ2,lambda1,lambda2,verdict
            with --bridgeland also ReZG1,ImZG1,ReZG2,ImZG2,ordering
  flow      PREFIX_log.csv: t,x_c,y_c,velocity_x,max_speed,barrier_ok
            PREFIX_final.csv, PREFIX_snap_NNNNN.csv, PREFIX_last.csv: x,y
  bundle    field,value on stdout; PREFIX.csv: half,x,y

Relative output paths are resolved under ${OUTDIR_ENV} when it is set.
A config file holds `key = value` lines (option names, `#` comments);
command-line flags take precedence over it.

Exit codes: 0 ok, 1 numerical failure, 2 no Kahler solution / no root,
3 flow blow-up, 4 branch escapes window, 64 usage, 74 I/O.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _window(text):
    parts = [float(v) for v in text.replace(",", " ").split()]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("window needs four numbers: x_lo x_hi y_lo y_hi")
    return tuple(parts)


def _complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


# defaults applied after flags and config are merged, so that a config
# value is never mistaken for an explicit flag
DEFAULTS = {
    "params": {"max_denominator": 10**6},
    "levelset": {"window": (-3.0, 3.0, -3.0, 3.0), "lines": 24, "out": "levelset"},
    "wall": {"m": None, "b_min": 0.9, "b_max": 1.1, "count": 21, "eps": 0.05, "bridgeland": False},
    "flow": {"t_max": 50.0, "dt": 1e-2, "grid": 200, "snapshot_every": 0, "speed_tol": 1e-6, "out": "flow"},
    "bundle": {"theta": None, "h": 1e-6, "max_denominator": 10**4, "out": "bundle"},
}


def build_parser():
    parser = _Parser(
        prog="calabi-slag",
        description="Level sets, construction data, stability walls and flows for Calabi-symmetric sLag multi-sections.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="file of key = value lines")
        p.add_argument("--degrees", action="store_true", default=None, help="angles given in degrees")

    p = sub.add_parser("params", help="construction data and admissibility", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--max-denominator", type=int)

    p = sub.add_parser("levelset", help="trace and plot a level set", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--c", type=float, help="level value")
    p.add_argument("--c-branch", type=int, help="use the critical level c_m instead of --c")
    p.add_argument("--window", type=_window, help="x_lo x_hi y_lo y_hi")
    p.add_argument("--lines", type=int, help="seed grid lines per direction")
    p.add_argument("--out", help="output prefix")

    p = sub.add_parser("wall", help="b-scan of charges and verdicts", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--b-min", type=float)
    p.add_argument("--b-max", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--bridgeland", type=_bool, nargs="?", const=True)
    p.add_argument("--out", help="CSV file (default stdout)")

    p = sub.add_parser("flow", help="momentum curve flow experiment", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--speed-tol", type=float)
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--out", help="output prefix")

    p = sub.add_parser("bundle", help="split Fano bundle branch analysis", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--xi", type=_complex, help="complex, e.g. 2-1j")
    p.add_argument("--b", type=float)
    p.add_argument("--theta", type=float, help="default: smallest nonnegative vertical phase")
    p.add_argument("--h", type=float, help="finite-difference step in Re xi")
    p.add_argument("--max-denominator", type=int)
    p.add_argument("--out", help="output prefix")
    return parser


def _actions(parser, command):
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest: a for a in sub.choices[command]._actions if a.dest not in ("help", "config")}


def read_config(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def resolve_args(parser, argv):
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a command is required")
    actions = _actions(parser, args.command)
    if args.config:
        for key, text in read_config(args.config).items():
            if key not in actions:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, key) is not None:
                continue
            act = actions[key]
            conv = act.type or (_bool if act.nargs == 0 or isinstance(act, argparse._StoreTrueAction) else str)
            try:
                setattr(args, key, conv(text))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}")
    for key, value in DEFAULTS.get(args.command, {}).items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    if args.degrees is None:
        args.degrees = False
    if args.degrees and getattr(args, "theta", None) is not None:
        args.theta = math.radians(args.theta)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def out_path(name) -> Path:
    path = Path(name)
    base = os.environ.get(OUTDIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _open_out(name):
    path = out_path(name)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _emit_fields(stdout, rows):
    csvio.write_rows(stdout, ("field", "value"), rows)


# ------------------------------------------------------------------ commands


def cmd_params(args, stdout):
    _require(args, "n")
    if (args.theta is None) == (args.p is None):
        raise UsageError("give exactly one of --theta and --p")
    if args.p is not None:
        params = construct_from_p(args.n, args.p, args.m)
    else:
        params = construct(args.n, args.theta, args.m)
    adm = find_admissible_k(params, args.max_denominator)
    rows = [
        ("n", params.n),
        ("m_branch", params.m_branch),
        ("theta_hat", params.theta_hat),
        ("c", params.c),
        ("q", params.q),
        ("a", params.a),
        ("p", params.p),
        ("ap", params.ap),
        ("ratio", params.ratio),
        ("admissible", adm is not None),
        ("ratio_num", "" if adm is None else adm.ratio.numerator),
        ("ratio_den", "" if adm is None else adm.ratio.denominator),
        ("k", "" if adm is None else adm.k),
        ("kq", "" if adm is None else adm.kq),
        ("kap", "" if adm is None else adm.kap),
    ]
    _emit_fields(stdout, rows)
    return EXIT_OK


def levelset_components(n, theta, c, window, lines=24):
    """Traced branches plus their vertical tangent points, in a stable order."""
    level = HarmonicLevelSet(n, theta, c)
    branches = trace_all(level, window, TraceConfig(), lines)
    return level, branches


def cmd_levelset(args, stdout):
    _require(args, "n", "theta")
    if (args.c is None) == (args.c_branch is None):
        raise UsageError("give exactly one of --c and --c-branch")
    c = args.c if args.c is not None else solve_critical_data(args.n, args.theta, args.c_branch)[0]
    window = as_window(args.window)
    _, branches = levelset_components(args.n, args.theta, c, window, args.lines)
    rows, tangents = [], []
    plot = SvgPlot(window, title=f"n={args.n} theta={args.theta:.6g} c={c:.6g}")
    for i, br in enumerate(branches):
        rows += [(i, x, y) for x, y in br.points]
        plot.polyline(br.points)
        for pt in br.vertical_tangents():
            tangents.append((i, pt.x, pt.y))
            plot.marker(pt.x, pt.y)
    if window.x_lo < 1.0 < window.x_hi:
        plot.vline(1.0)
    with _open_out(args.out + ".csv") as fh:
        csvio.write_rows(fh, ("component", "x", "y"), rows)
    with _open_out(args.out + "_tangents.csv") as fh:
        csvio.write_rows(fh, ("component", "x", "y"), tangents)
    with _open_out(args.out + ".svg") as fh:
        plot.write(fh)
    _emit_fields(
        stdout,
        [("c", c), ("components", len(branches)), ("closed", sum(b.is_closed for b in branches)),
         ("vertical_tangents", len(tangents))]
        + [(f"tangent_{i}", f"{csvio.fmt(x)} {csvio.fmt(y)}") for i, x, y in tangents],
    )
    return EXIT_OK


def cmd_wall(args, stdout):
    _require(args, "n", "theta")
    if args.count < 1:
        raise UsageError("--count must be positive")
    if args.bridgeland and args.n != 3:
        raise UsageError("--bridgeland needs n = 3")
    params = construct(args.n, args.theta, args.m)
    bs = np.linspace(args.b_min, args.b_max, args.count) if args.count > 1 else np.array([args.b_min])
    # snap the grid point nearest the wall onto it exactly
    bs = [1.0 if abs(b - 1.0) < 1e-12 else float(b) for b in bs]
    rows = wall_scan(params, bs, args.eps, bool(args.bridgeland))
    if args.out:
        with _open_out(args.out) as fh:
            write_wall_scan(fh, rows, bool(args.bridgeland))
    else:
        write_wall_scan(stdout, rows, bool(args.bridgeland))
    return EXIT_OK


def _write_curve(name, curve):
    with _open_out(name) as fh:
        csvio.write_rows(fh, ("x", "y"), curve)


def _flow_outputs(prefix, report):
    with _open_out(prefix + "_log.csv") as fh:
        report.write_log(fh)
    _write_curve(prefix + "_final.csv", report.final.curve)
    for k, snap in enumerate(report.snapshots):
        _write_curve(f"{prefix}_snap_{k:05d}.csv", snap.curve)
    pts = np.vstack([report.initial.curve, report.final.curve])
    pad = 0.05 * max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1e-3)
    window = (pts[:, 0].min() - pad, pts[:, 0].max() + pad, pts[:, 1].min() - pad, pts[:, 1].max() + pad)
    plot = SvgPlot(window, title=f"t = {report.final.t:.6g}")
    plot.polyline(report.initial.curve, color="#888888", dashed=True)
    for prof in (report.lower, report.upper):
        if prof is not None:
            plot.polyline(prof.samples, color="#2ca02c")
    plot.polyline(report.final.curve, color="#d62728")
    with _open_out(prefix + ".svg") as fh:
        plot.write(fh)


def cmd_flow(args, stdout):
    _require(args, "n", "theta", "b")
    if args.b == 1.0:
        raise UsageError("b = 1 is the wall; use b > 1 or b < 1")
    params = construct(args.n, args.theta)
    cfg = FlowConfig(dt=args.dt, grid=args.grid)
    try:
        if args.b > 1.0:
            report = unstable_limit_experiment(
                params, args.b, cfg, t_max=args.t_max, speed_tol=args.speed_tol, snapshot_every=args.snapshot_every
            )
        else:
            report = stable_relaxation_experiment(params, args.b, cfg, t_max=args.t_max)
    except BlowUp as exc:
        state = getattr(exc, "state", None)
        if state is not None:
            _write_curve(args.out + "_last.csv", state.curve)
        rep = getattr(exc, "report", None)
        if rep is not None:
            with _open_out(args.out + "_log.csv") as fh:
                rep.write_log(fh)
        raise
    _flow_outputs(args.out, report)
    last = report.log[-1]
    rows = [
        ("regime", "unstable" if args.b > 1.0 else "stable"),
        ("steps", len(report.log) - 1),
        ("t_final", report.final.t),
        ("max_speed_final", last.max_speed),
        ("x_c", last.x_c),
        ("y_c", last.y_c),
        ("velocity_x_all_negative", all(r.velocity_x < 0 for r in report.log)),
        ("barrier_all_ok", all(r.barrier_ok for r in report.log)),
        ("distance_first", report.distances[0]),
        ("distance_second", report.distances[1]),
        ("spacing", report.spacing),
    ]
    _emit_fields(stdout, rows)
    return EXIT_OK


def _fraction_text(fr):
    return "" if fr is None else f"{fr.numerator}/{fr.denominator}"


def cmd_bundle(args, stdout):
    _require(args, "r", "m", "xi", "b")
    psi = cmath.phase(args.xi)
    thetas = vertical_branch_thetas(args.m, args.r, psi)
    theta = thetas[0] if args.theta is None else args.theta
    params = BundleParams(args.r, args.m, args.xi, args.b, theta)
    vb = trace_vertical_branch(params)
    q, qp, report = boundary_intersections(params, args.max_denominator)
    rec = monotonicity_record(params, args.h)
    rows = [
        ("theta_family", " ".join(csvio.fmt(t) for t in thetas)),
        ("theta_hat", theta),
        ("fano", params.is_fano),
        ("r_even", params.even_case),
        ("small_b", in_smallness_window(params)),
        ("negative_case", negative_case(params)),
        ("near_nongeneric", near_nongeneric(params)),
        ("q", q),
        ("q_prime", qp),
        ("q_over_xi2", _fraction_text(report.q_over_xi2)),
        ("q_over_q_prime", _fraction_text(report.q_over_q_prime)),
        ("sign_q", rec.sign_q),
        ("sign_q_prime", rec.sign_q_prime),
        ("d_q", rec.d_q),
        ("d_q_prime", rec.d_q_prime),
        ("sign_pattern_plus_minus", rec.plus_minus_pattern),
    ]
    _emit_fields(stdout, rows)
    pts = np.vstack([vb.upper, vb.lower])
    pad = 0.1 * max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]))
    window = (min(0.0, pts[:, 0].min()) - pad, args.b + pad, pts[:, 1].min() - pad, pts[:, 1].max() + pad)
    plot = SvgPlot(window, title=f"r={args.r} m={args.m} xi={args.xi} b={args.b:.6g}")
    plot.polyline(vb.upper, color="#1f77b4")
    plot.polyline(vb.lower, color="#d62728")
    plot.vline(args.b)
    plot.marker(args.b, q)
    plot.marker(args.b, qp)
    with _open_out(args.out + ".csv") as fh:
        csvio.write_rows(fh, ("half", "x", "y"), [(0, x, y) for x, y in vb.upper] + [(1, x, y) for x, y in vb.lower])
    with _open_out(args.out + ".svg") as fh:
        plot.write(fh)
    return EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "levelset": cmd_levelset,
    "wall": cmd_wall,
    "flow": cmd_flow,
    "bundle": cmd_bundle,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = resolve_args(parser, argv)
        buf = io.StringIO()
        code = COMMANDS[args.command](args, buf)
        stdout.write(buf.getvalue())
        return code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except BlowUp as exc:
        print(f"blow-up: {exc}", file=stderr)
        return EXIT_BLOWUP
    except BranchEscapesWindow as exc:
        print(f"branch escapes window: {exc}", file=stderr)
        return EXIT_ESCAPE
    except (NotKahler, NoRoot) as exc:
        print(f"no solution: {exc}", file=stderr)
        return EXIT_NO_SOLUTION
    except OSError as exc:
        print(f"I/O error: {exc}", file=stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=stderr)
        return EXIT_USAGE
    except CalabiSlagError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
