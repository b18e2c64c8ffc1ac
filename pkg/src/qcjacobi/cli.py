"""Command-line entry point: ``qcj {validate,geodesic,frame,report,conjugate}``.

Exit codes: 0 success, 1 suite failure / invalid model / curvature matrix
unavailable, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .comparison import bonnet_myers_report, flat_conjugate_time, trace_criterion_check
from .flow import DEFAULT_DT, initial_state, integrate, trajectory_arrays
from .frame import CurvatureUnavailable, evolve_frame, rcc, structural_slice, trace_rcc
from .model import ModelValidationError, make_model, model_from_dict
from .suites import run_all

log = logging.getLogger("qcjacobi")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Malformed command-line input (exit code 2)."""


def _setup_logging():
    level = os.environ.get("QCJ_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, format="qcj: %(levelname)s: %(message)s",
                        level=getattr(logging, level, logging.WARNING))


def _load_model(args):
    if args.file:
        try:
            with open(args.file) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read model file {args.file}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("model file must hold a JSON object")
        if args.model and data.get("kind") != args.model:
            raise UsageError(f"--model {args.model} does not match file kind {data.get('kind')!r}")
        try:
            return model_from_dict(data)
        except ModelValidationError:
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    kind = args.model or "flat"
    if kind == "custom":
        raise UsageError("--model custom requires --file")
    try:
        return make_model(kind, n=args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _initial(args, M):
    d = M.dim
    try:
        u = np.eye(d)[0] if args.u is None else io.read_floats(args.u)
        v = np.zeros(3) if args.v is None else io.read_floats(args.v)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if u.shape != (d,):
        raise UsageError(f"--u needs {d} components for n={M.n}, got {u.size}")
    if v.shape != (3,):
        raise UsageError(f"--v needs 3 components, got {v.size}")
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise UsageError("--u must be non-zero")
    if abs(norm - 1.0) > 1e-12:
        log.warning("|u0| = %.17g; renormalized to 1", norm)
        u = u / norm
    return initial_state(u, v)


def _emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def cmd_validate(args) -> int:
    M = _load_model(args)
    checks = run_all(M, seed=args.seed, count=args.count, T=args.T, dt=args.dt)
    failed = [c for c in checks if not c.passed]
    lines = [f"# qcj validate kind={M.kind} n={M.n} seed={args.seed} extremals={args.count} "
             f"T={io.fmt_float(args.T)} dt={io.fmt_float(args.dt)}"]
    lines += [c.line() for c in checks]
    if M.kind != "flat":
        lines.append("# R_cc full-matrix checks skipped: curvature matrix unavailable for this model")
    lines.append(f"# {len(checks) - len(failed)}/{len(checks)} checks passed")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if not failed else EXIT_FAIL


def cmd_geodesic(args) -> int:
    M = _load_model(args)
    traj = integrate(M, _initial(args, M), args.T, args.dt)
    t, u, v = trajectory_arrays(traj)
    if args.format == "json":
        doc = {"kind": M.kind, "n": M.n, "dt": args.dt,
               "samples": [{"t": ti, "u": ui, "v": vi} for ti, ui, vi in zip(t, u, v)]}
        _emit(args, io.dumps(doc) + "\n")
    else:
        _emit(args, io.trajectory_csv(t, u, v))
    return EXIT_OK


def cmd_frame(args) -> int:
    M = _load_model(args)
    if args.full_matrix and M.kind != "flat":
        raise CurvatureUnavailable("--full-matrix")
    traj = integrate(M, _initial(args, M), args.T, args.dt)
    frames = evolve_frame(M, traj)
    _, u, v = trajectory_arrays(traj)
    traces = trace_rcc(M, u, v)
    R = None
    if args.full_matrix:
        Y = np.stack([f.Y for f in frames])
        R = rcc(structural_slice(M, u, v), Y)
    lines = []
    for k, f in enumerate(frames):
        lines.append(io.frame_record(f.t, f.O, f.Y, f.W, traces[k], None if R is None else R[k]))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _conjugate_doc(M, s0, args):
    reports = {m: flat_conjugate_time(M.n, s0.u, s0.v, horizon=args.horizon,
                                      resolution=args.resolution, method=m, dt=args.dt)
               for m in ("jacobi_determinant", "exp_rank")}
    times = [r.first_conjugate_time for r in reports.values()]
    if all(t is not None for t in times):
        diff = abs(times[0] - times[1])
        agree = diff <= 10 * args.resolution
    else:
        diff = None
        agree = all(t is None for t in times)
    doc = {name: r.to_dict() for name, r in reports.items()}
    doc["difference"] = diff
    doc["agree"] = agree
    return doc


def cmd_report(args) -> int:
    M = _load_model(args)
    s0 = _initial(args, M)
    rep = bonnet_myers_report(M)
    traj = integrate(M, s0, args.T, args.dt)
    _, margin = trace_criterion_check(M, traj)
    conj = _conjugate_doc(M, s0, args) if M.kind == "flat" else None
    doc = {"kind": M.kind, "n": M.n, "kappa": rep.kappa, "diameter_bound": rep.diameter_bound,
           "margin": margin, "conjugate": conj}
    _emit(args, io.dumps(doc) + "\n")
    return EXIT_OK


def cmd_conjugate(args) -> int:
    M = _load_model(args)
    if M.kind != "flat":
        raise UsageError("conjugate times are only available for the flat model")
    s0 = _initial(args, M)
    doc = {"kind": M.kind, "n": M.n, "u0": s0.u, "v0": s0.v}
    doc.update(_conjugate_doc(M, s0, args))
    _emit(args, io.dumps(doc) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=("flat", "sasakian", "custom"))
    common.add_argument("--file", help="model JSON file")
    common.add_argument("--n", type=int, default=2, help="quaternionic rank (n >= 2)")
    common.add_argument("--u", help="initial horizontal covector, comma-separated (default e1)")
    common.add_argument("--v", help="initial vertical covector, comma-separated (default 0,0,0)")
    common.add_argument("--T", type=float, default=float(np.pi), help="arc time")
    common.add_argument("--dt", type=float, default=DEFAULT_DT)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", default="-")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--full-matrix", action="store_true",
                        help="also dump R_cc (needs the full curvature matrix)")

    p = argparse.ArgumentParser(prog="qcj", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", parents=[common], help="run all invariant suites")
    v.add_argument("--count", type=int, default=5, help="random extremals per identity suite")
    sub.add_parser("geodesic", parents=[common], help="integrate an extremal")
    sub.add_parser("frame", parents=[common], help="dump the canonical frame along an extremal")
    for name, text in (("report", "Bonnet-Myers report"), ("conjugate", "flat-model conjugate time")):
        c = sub.add_parser(name, parents=[common], help=text)
        c.add_argument("--horizon", type=float, default=None)
        c.add_argument("--resolution", type=float, default=1e-6)
    return p


COMMANDS = {
    "validate": cmd_validate,
    "geodesic": cmd_geodesic,
    "frame": cmd_frame,
    "report": cmd_report,
    "conjugate": cmd_conjugate,
}


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.n < 2:
        print("qcj: error: --n must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    if not args.dt > 0 or not args.T >= 0:
        print("qcj: error: --dt must be positive and --T non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qcj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        print(f"qcj: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CurvatureUnavailable as exc:
        print(f"qcj: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
