"""Command-line interface: ``statdisc <command> ...``.

Exit codes: 0 success, 1 error, 2 surviving counterexample candidates
(``explore`` only).
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import discs, equations, jets, quadric
from .exceptions import StatdiscError
from .lab import experiment, search

log = logging.getLogger("statdisc")


def _vector(text):
    try:
        return np.array([complex(p.strip().replace(" ", "")) for p in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from exc


def _real_vector(text):
    v = _vector(text)
    if np.any(v.imag != 0):
        raise argparse.ArgumentTypeError(f"expected a real vector: {text!r}")
    return v.real


def _cplx(v):
    return discs._cplx(v)


def _seed(args):
    env = os.environ.get("STATDISC_SEED")
    return int(env) if env else args.seed


def _emit(args, payload, csv_text=None):
    if args.format == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_validate(args):
    Q = quadric.QuadricModel.load(args.quadric)
    cls = quadric.validate(Q, args.b, args.tol)
    seed = _seed(args)
    rank, witness = quadric.generic_segre_rank(Q, args.samples, seed, args.tol,
                                               return_witness=True)
    b_pc = quadric.find_positive_combination(Q, args.budget, seed, args.tol)
    out = cls.to_dict()
    out.update(
        n=Q.n, d=Q.d,
        generic_segre_rank=rank,
        segre_witness=_cplx(witness),
        segre_number_two=rank == Q.d,
        positive_combination=None if b_pc is None else [float(x) for x in b_pc],
        positive_combination_note=("found" if b_pc is not None
                                   else "not found within budget (not a proof of absence)"),
    )
    if args.b is not None and args.V is not None:
        try:
            ok, M = quadric.d_nondegenerate(Q, args.b, args.V, args.tol)
            out["d_nondegenerate"] = {"verdict": ok, "certificate": M.tolist()}
        except StatdiscError as exc:
            out["d_nondegenerate"] = {"error": str(exc)}
    _emit(args, out)
    return 0


def cmd_solve_x(args):
    Q = quadric.QuadricModel.load(args.quadric)
    guard = equations.guard_report(Q, args.a, args.b)
    sol = equations.solve_X(Q, args.a, args.b, force=args.force)
    out = {
        "X": _cplx(sol.X),
        "norm_X": sol.norm_X,
        "residual_norm": sol.residual_norm,
        "iterations": sol.iterations,
        "method": sol.method,
        "guard": {"ok": guard.ok, "alpha": guard.alpha, "beta": guard.beta,
                  "radius": guard.radius, "inequality": guard.inequality},
        "K": [_cplx(equations.stein_K(sol.X, A)) for A in Q.matrices],
    }
    _emit(args, out)
    return 0


def cmd_disc_verify(args):
    Q = quadric.QuadricModel.load(args.quadric)
    L = discs.build_lift(Q, args.a, args.b, args.V, force=args.force)
    ver = discs.verify_lift(L, args.samples)
    out = discs.lift_to_dict(L, ver)
    out["defective"] = discs.defective(L, args.tol)
    _emit(args, out, csv_text=discs.boundary_trace_csv(L, args.samples))
    return 0


def cmd_jet(args):
    Q = quadric.QuadricModel.load(args.quadric)
    rep = jets.local_diffeo_verdict(Q, args.a, args.b, args.V, args.tol, step=args.step)
    out = rep.to_dict()
    out["jet"] = {"m": jets.jet_map(Q, args.a, args.b, args.V).m.tolist()}
    _emit(args, out)
    return 0


def cmd_search_min(args):
    Q = quadric.QuadricModel.load(args.quadric)
    res = search.search_stationary_minimal(Q, args.b, args.budget, _seed(args), args.tol)
    out = {"found": res.found, "evaluations": res.evaluations, "stage1_hits": res.stage1_hits}
    if res.found:
        out.update(a=_cplx(res.a), V=_cplx(res.V), stage=res.stage, lam=res.lam,
                   certificate=res.certificate.to_dict())
    else:
        out["note"] = "not found within budget"
    _emit(args, out)
    return 0 if res.found else 1


def cmd_explore(args):
    params = {}
    if args.config:
        params.update(json.loads(Path(args.config).read_text()))
    for key in ("kind", "n", "d", "trials", "a_radius", "budget", "workers"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.no_search:
        params["search"] = False
    params["seed"] = _seed(args)
    params.setdefault("tolerances", {})
    if args.tol is not None:
        params["tolerances"]["rank_tol"] = args.tol
    params["output_path"] = args.output
    params["format"] = args.format
    config = experiment.ExperimentConfig(**params)
    report, code = experiment.run_experiment(config)
    if not args.output:
        sys.stdout.write(experiment.report_csv(report) if args.format == "csv"
                         else experiment.dumps_report(report) + "\n")
    log.info("summary: %s", json.dumps(report["summary"]))
    return code


def _size(text):
    parts = [int(p) for p in text.split("-")]
    return parts[0] if len(parts) == 1 else parts


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="relative rank tolerance")
    common.add_argument("--samples", type=int, default=256)
    common.add_argument("--seed", type=int, default=0, help="overridden by STATDISC_SEED")
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--output", "-o", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    disc_args = argparse.ArgumentParser(add_help=False)
    disc_args.add_argument("quadric", help="quadric JSON file")
    disc_args.add_argument("--a", type=_vector, required=True, help="e.g. 0.01,0.02+0.01j")
    disc_args.add_argument("--b", type=_real_vector, required=True)
    disc_args.add_argument("--force", action="store_true", help="solve outside the guard")

    parser = argparse.ArgumentParser(prog="statdisc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="classify a quadric")
    p.add_argument("quadric")
    p.add_argument("--b", type=_real_vector, default=None)
    p.add_argument("--V", type=_vector, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve-x", parents=[common, disc_args], help="solve for X and K_j")
    p.set_defaults(func=cmd_solve_x)

    p = sub.add_parser("disc", help="stationary disc lifts")
    dsub = p.add_subparsers(dest="disc_command", required=True)
    q = dsub.add_parser("verify", parents=[common, disc_args], help="build and verify a lift")
    q.add_argument("--V", type=_vector, required=True)
    q.set_defaults(func=cmd_disc_verify)

    p = sub.add_parser("jet", parents=[common, disc_args], help="1-jet Jacobian report")
    p.add_argument("--V", type=_vector, required=True)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_jet)

    p = sub.add_parser("search-min", parents=[common], help="search a stationary minimal (a, V)")
    p.add_argument("quadric")
    p.add_argument("--b", type=_real_vector, required=True)
    p.set_defaults(func=cmd_search_min)

    p = sub.add_parser("explore", parents=[common], help="run an exploration campaign")
    p.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    p.add_argument("--kind", default=None)
    p.add_argument("--n", type=_size, default=None, help="order, or range like 2-4")
    p.add_argument("--d", type=_size, default=None, help="codimension, or range like 1-3")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--a-radius", dest="a_radius", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-search", action="store_true")
    p.set_defaults(func=cmd_explore)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "explore":
        if args.tol is None:
            args.tol = quadric.DEFAULT_RANK_TOL
        if args.budget is None:
            args.budget = 10_000 if args.command == "search-min" else 200
    try:
        return args.func(args)
    except (StatdiscError, OSError, ValueError) as exc:
        print(f"statdisc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
