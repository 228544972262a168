"""Command-line entry point: integrate, verify, project.

Exit codes: 0 success, 1 a verification suite failed, 2 invalid
configuration, 3 integration left the admissible domain.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .connection import rhs_f
from .errors import CrossSingular, DomainExit, GeometryError, NullSpeed, StepBudgetExceeded
from .euler_poisson import ModelParams
from .integrate import State3, curvature_torsion, integrate
from .pseudo_euclidean import Metric
from .reduction import project_state
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3

CSV_HEADER = "t,x0,x1,x2,u0,u1,u2,du0,du1,du2,kappa,tau,ep_residual"


class ConfigError(Exception):
    """Invalid command-line configuration; the message names the field."""


def _triple(field, text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"{field}: expected three comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{field}: not a number in {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{field}: entries must be finite")
    return np.array(vals)


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get("AUTOGEO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"seed: AUTOGEO_SEED={env!r} is not an integer") from None


def _params(args):
    return ModelParams(
        m=0.0 if args.m is None else args.m,
        A=0.0 if args.A is None else args.A,
        metric=Metric.from_name(args.metric or "euclid"),
    )


def _fmt(x):
    return "nan" if x is None or not math.isfinite(x) else repr(float(x))


def _rows(traj):
    g = traj.params.metric
    for i in range(len(traj)):
        d = curvature_torsion(traj.u[i], traj.udot[i], traj.uddot[i], g)
        yield [float(traj.t[i]), *traj.x[i], *traj.u[i], *traj.udot[i], d.kappa, d.tau,
               float(traj.ep_residual[i])]


def _write_trajectory(traj, out, fmt, exit_t=None):
    if fmt == "json":
        doc = {
            "columns": CSV_HEADER.split(","),
            "rows": [[None if v is None or not math.isfinite(v) else v for v in row] for row in _rows(traj)],
            "domain_exit": exit_t,
        }
        out.write(json.dumps(doc) + "\n")
        return
    out.write(CSV_HEADER + "\n")
    for row in _rows(traj):
        out.write(",".join(_fmt(v) for v in row) + "\n")
    if exit_t is not None:
        out.write(f"# domain-exit t={exit_t!r}\n")


def _open_output(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_integrate(args):
    params = _params(args)
    x = _triple("x", args.x)
    u = _triple("u", args.u)
    du = _triple("du", args.du)
    if not args.h > 0:
        raise ConfigError("h: must be positive")
    if not args.t_end > 0:
        raise ConfigError("t-end: must be positive")
    try:
        rhs_f(u, du, params)
    except NullSpeed as exc:
        raise ConfigError(str(exc)) from None
    except CrossSingular as exc:
        raise ConfigError(f"du: {exc}") from None
    s0 = State3.make(x, u, du)
    exit_t = None
    try:
        traj = integrate(s0, params, args.t_end, args.h)
    except StepBudgetExceeded as exc:
        raise ConfigError(f"h: {exc}") from None
    except DomainExit as exc:
        traj = exc.trajectory
        exit_t = float(exc.state.t)
        print(f"domain exit at t={exit_t!r}: {exc}", file=sys.stderr)
    out = _open_output(args.output)
    try:
        _write_trajectory(traj, out, args.format, exit_t)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK if exit_t is None else EXIT_DOMAIN


def _suite_names(raw):
    if not raw:
        return list(SUITES)
    names = [n for item in raw for n in item.split(",") if n]
    for n in names:
        if n not in SUITES:
            raise ConfigError(f"suite: unknown suite {n!r} (choose from {', '.join(SUITES)})")
    return names


def cmd_verify(args):
    names = _suite_names(args.suite)
    seed = _seed(args.seed)
    if args.samples is not None and args.samples < 1:
        raise ConfigError("samples: must be at least 1")
    if args.workers < 1:
        raise ConfigError("workers: must be at least 1")
    explicit = any(v is not None for v in (args.metric, args.m, args.A))
    params = _params(args) if explicit else None
    reports = []
    for name in names:
        kwargs = {}
        if name == "helmholtz" and args.m is not None:
            kwargs["m_values"] = (args.m,)
        rep = run_suite(name, samples=args.samples, seed=seed, tol=args.tol, workers=args.workers,
                        params=params, **kwargs)
        reports.append(rep.as_dict())
        print(f"{name}: {'PASS' if rep.passed else 'FAIL'}", file=sys.stderr)
    out = _open_output(args.output)
    try:
        out.write(json.dumps(reports, indent=2) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_FAIL


def cmd_project(args):
    x = _triple("x", args.x)
    u = _triple("u", args.u)
    du = _triple("du", args.du)
    state = project_state(x, u, du)
    print(json.dumps(state.as_dict()))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="autogeo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p):
        p.add_argument("--metric", choices=("euclid", "pseudo"), default=None)
        p.add_argument("--m", type=float, default=None, help="coupling m (default 0)")
        p.add_argument("--A", type=float, default=None, help="Psi parameter A (default 0)")

    def state_flags(p, u_default):
        p.add_argument("--x", default="0,0,0", help="initial position x0,x1,x2")
        p.add_argument("--u", default=u_default, help="velocity u0,u1,u2")
        p.add_argument("--du", default="0,0,0", help="acceleration du0,du1,du2")

    p = sub.add_parser("integrate", help="integrate the autogeodesic equation with RK4")
    model_flags(p)
    state_flags(p, "1,0,0")
    p.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("verify", help="run verification suites and print a JSON report")
    model_flags(p)
    p.add_argument("--suite", action="append", default=None,
                   help="suite name (repeatable or comma-separated; default all)")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="default: $AUTOGEO_SEED or 0")
    p.add_argument("--tol", type=float, default=None, help="override the suite tolerance")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("project", help="contact coordinates (t, x, v, v') of a state")
    state_flags(p, "1,0,0")
    p.set_defaults(func=cmd_project)
    return parser


VECTOR_FLAGS = ("--x", "--u", "--du")


def _glue_vectors(argv):
    """Turn ``--du -1,0,0`` into ``--du=-1,0,0`` so argparse keeps the leading minus."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in VECTOR_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_vectors(argv))
    try:
        return args.func(args)
    except (ConfigError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
