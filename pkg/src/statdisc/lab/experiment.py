"""Reproducible exploration campaigns over random quadrics.

Each trial draws a quadric, disc parameters ``(a, V)`` and records every
predicate on the same instance. Trials whose numbers look like a
counterexample to the 1-jet question (``D(a)``-nondegenerate but not a
local diffeomorphism), or that violate a proved implication, are re-run at
tightened tolerances before being reported.
"""

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import discs, equations, jets, linalg, quadric
from ..exceptions import StatdiscError
from ..linalg import DEFAULT_RANK_TOL, Definiteness
from . import generators
from .schema import SCHEMA_ID, validate_report
from .search import search_stationary_minimal

log = logging.getLogger(__name__)

QUARANTINE_FACTOR = 1e-2
MIXED_VARIANTS = (
    ("pseudoconvex", True, "random"),
    ("strongly-nondeg-indefinite", False, "random"),
    ("pseudoconvex", False, "kernel"),
    ("strongly-nondeg-indefinite", False, "kernel"),
)
CONSISTENT = "CONSISTENT"
CANDIDATE = "COUNTEREXAMPLE-CANDIDATE"
FAILED = "FAILED"


def _cplx(v):
    return None if v is None else [[float(z.real), float(z.imag)] for z in np.asarray(v, complex)]


@dataclass
class TrialRecord:
    trial_id: int = 0
    seed: int = 0
    kind: str = "custom"
    n: int = 1
    d: int = 1
    quadric_hash: str | None = None
    quadric: dict | None = None
    parameters: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    status: str = CONSISTENT
    error: str | None = None
    search: dict | None = None
    quarantine: dict | None = None

    @property
    def pd_certificate_applicable(self):
        f = self.flags
        return bool(f.get("pseudoconvex") and f.get("stationary_minimal") and f.get("guard"))

    @property
    def pd_certificate_violation(self):
        return self.pd_certificate_applicable and not self.flags.get("sym_part_pd")

    @property
    def implication_violation(self):
        return bool(self.flags.get("da_nondeg")) and self.flags.get("stationary_minimal") is False

    def to_dict(self):
        return asdict(self)


def _rel_min_abs_eig(M):
    w = np.abs(np.linalg.eigvalsh(M))
    return float(w.min() / w.max()) if w.max() > 0 else 0.0


def conjecture_trial(Q, b, a, V, tol=DEFAULT_RANK_TOL, record=None):
    """Evaluate every predicate on ``(Q, a, b, V)``; solver failures are recorded."""
    rec = record if record is not None else TrialRecord(n=Q.n, d=Q.d)
    rec.n, rec.d = Q.n, Q.d
    rec.quadric_hash = Q.fingerprint()
    rec.quadric = Q.to_dict()
    b = np.asarray(b, float)
    a = np.asarray(a, complex)
    V = np.asarray(V, complex)
    rec.parameters.update(a=_cplx(a), b=[float(x) for x in b], V=_cplx(V))
    f, mg = rec.flags, rec.margins
    for key in ("pseudoconvex", "generating", "levi_nondeg", "segre_rank", "guard",
                "stationary_minimal", "da_nondeg", "da_strongly", "diffeo", "sym_part_pd",
                "defective"):
        f[key] = None
    try:
        cls = quadric.validate(Q, b, tol)
        f["generating"] = cls.generating
        f["levi_nondeg"] = cls.levi_nondegenerate
        f["pseudoconvex"] = cls.strongly_pseudoconvex_at_b
        mg["pseudoconvex_min_eig"] = cls.diagnostics["smallest_eigenvalue"]
        mg["levi_rank"] = float(cls.levi_rank)
        f["segre_rank"] = quadric.segre_rank(Q, V, tol)

        guard = equations.guard_report(Q, a, b)
        f["guard"] = guard.ok
        mg["guard_margin"] = float(guard.margin)
        sol = equations.solve_X(Q, a, b)
        mg["norm_X"] = sol.norm_X

        cert = discs.stationary_minimal(Q, a, b, V, tol, solution=sol)
        f["stationary_minimal"] = cert.minimal
        f["defective"] = not cert.minimal
        mg["minimality_sv"] = cert.smallest_singular_value
        mg["orbit_dim"] = float(cert.orbit_dim)

        da = discs.da_nondegenerate(Q, a, b, V, tol, solution=sol)
        f["da_nondeg"] = da.nondegenerate
        f["da_strongly"] = da.strongly
        mg["da_rel_min_abs_eig"] = _rel_min_abs_eig(da.matrix)
        mg["da_min_eig"] = float(np.linalg.eigvalsh(da.matrix)[0])

        block = jets.jacobian_block_analytic(Q, a, b, V, solution=sol)
        diffeo, cond, margin, sym_cls = jets.block_verdict(block, tol)
        f["diffeo"] = diffeo
        f["sym_part_pd"] = sym_cls is Definiteness.POSITIVE_DEFINITE
        mg["block_margin"] = margin
        mg["sym_part_min_eig"] = float(np.linalg.eigvalsh((block + block.T) / 2)[0])
    except (StatdiscError, np.linalg.LinAlgError, AssertionError) as exc:
        rec.status = FAILED
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.status = CANDIDATE if (f["da_nondeg"] and not f["diffeo"]) else CONSISTENT
    return rec


def _parse_range(value):
    if isinstance(value, (list, tuple)):
        lo, hi = int(value[0]), int(value[1])
    else:
        lo = hi = int(value)
    if lo < 1 or hi < lo:
        raise ValueError(f"bad size range {value!r}")
    return lo, hi


@dataclass
class ExperimentConfig:
    kind: str = "pseudoconvex"
    n: object = 2
    d: object = 2
    trials: int = 10
    seed: int = 0
    a_radius: float = 0.05
    budget: int = 10_000
    search: bool = True
    v_mode: str = "random"
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str = "json"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.kind not in generators.KINDS + ("mixed",):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.v_mode not in ("random", "kernel"):
            raise ValueError("v_mode must be random or kernel")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        _parse_range(self.n)
        _parse_range(self.d)
        if self.a_radius > 0.25:
            log.warning("a_radius %.3g is large; most draws will be shrunk by the guard",
                        self.a_radius)

    @property
    def rank_tol(self):
        return float(self.tolerances.get("rank_tol", DEFAULT_RANK_TOL))

    def echo(self):
        out = asdict(self)
        out["n"] = list(_parse_range(self.n)) if isinstance(self.n, (list, tuple)) else self.n
        out["d"] = list(_parse_range(self.d)) if isinstance(self.d, (list, tuple)) else self.d
        return out


def trial_seed(master, index):
    """Counter-based per-trial seed: independent of execution order."""
    return int(np.random.SeedSequence([int(master) % 2**64, index]).generate_state(1, np.uint64)[0])


def _draw_sizes(config, kind, rng):
    n_lo, n_hi = _parse_range(config.n)
    d_lo, d_hi = _parse_range(config.d)
    if kind == "strongly-nondeg-indefinite":
        n_lo = max(n_lo, 2)
    n = int(rng.integers(n_lo, max(n_lo, n_hi) + 1))
    cap = {"pseudoconvex": n * n, "strongly-nondeg-indefinite": n * n - 1}.get(kind, d_hi)
    d = int(rng.integers(d_lo, max(d_lo, min(d_hi, cap)) + 1))
    return n, d


def run_trial(config, index, tol=None):
    """Run trial ``index`` of ``config`` (pure function of its inputs)."""
    seed = trial_seed(config.seed, index)
    rng = np.random.default_rng([seed, 7])
    kind = config.kind
    use_search = config.search and kind == "pseudoconvex"
    v_mode = config.v_mode
    if kind == "mixed":
        # cycle: searched pseudoconvex, then random and kernel V for both classes
        kind, use_search, v_mode = MIXED_VARIANTS[index % len(MIXED_VARIANTS)]
    n, d = _draw_sizes(config, kind, rng)
    rec = TrialRecord(trial_id=index, seed=seed, kind=kind, n=n, d=d)
    tol = config.rank_tol if tol is None else tol
    try:
        Q = generators.random_quadric(kind, n, d, seed)
        b = generators.choose_b(Q, kind, seed)
        if b is None:
            raise generators.GenerationError("no invertible combination found")
        if use_search:
            res = search_stationary_minimal(Q, b, config.budget, seed, tol)
            rec.search = {"found": res.found, "stage": res.stage, "lam": res.lam,
                          "evaluations": res.evaluations}
            if not res.found:
                raise generators.GenerationError(
                    f"search exhausted after {res.evaluations} evaluations")
            a, V = res.a, res.V
        else:
            a = generators.admissible_a(Q, b, rng, config.a_radius)
            if a is None:
                raise generators.GenerationError("no guard-passing a found")
            V = None
            if v_mode == "kernel":
                V = generators.kernel_vector(Q, b, rng)
                rec.parameters["v_mode"] = "kernel" if V is not None else "random"
            if V is None:
                V = linalg.random_unit_vector(rng, n)
            V = V * rng.uniform(0.5, 2.0)
    except (StatdiscError, np.linalg.LinAlgError) as exc:
        rec.status = FAILED
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    return conjecture_trial(Q, b, a, V, tol, record=rec)


def _needs_quarantine(rec):
    return rec.status == CANDIDATE or rec.pd_certificate_violation or rec.implication_violation


def quarantine(rec, tol):
    """Re-run a suspicious record at tightened tolerance from its stored inputs."""
    Q = quadric.QuadricModel.from_dict(rec.quadric)
    p = rec.parameters
    a = np.array([complex(*z) for z in p["a"]])
    V = np.array([complex(*z) for z in p["V"]])
    tight = tol * QUARANTINE_FACTOR
    again = conjecture_trial(Q, p["b"], a, V, tight)
    rec.quarantine = {
        "rank_tol": tight,
        "status": again.status,
        "flags": again.flags,
        "pd_certificate_violation": again.pd_certificate_violation,
        "implication_violation": again.implication_violation,
    }
    return rec


def _timed(args):
    config, index = args
    t0 = time.perf_counter()
    rec = run_trial(config, index)
    if _needs_quarantine(rec):
        quarantine(rec, config.rank_tol)
    return rec, (time.perf_counter() - t0) * 1e3


def _surviving(rec, key):
    q = rec.quarantine
    if key == "candidate":
        return rec.status == CANDIDATE and q is not None and q["status"] == CANDIDATE
    return getattr(rec, key) and q is not None and q[key]


def summarize(records):
    ok = [r for r in records if r.status != FAILED]
    cells = {"da_nondeg&diffeo": 0, "da_nondeg&~diffeo": 0,
             "~da_nondeg&diffeo": 0, "~da_nondeg&~diffeo": 0}
    for r in ok:
        key = ("" if r.flags["da_nondeg"] else "~") + "da_nondeg&" + \
              ("" if r.flags["diffeo"] else "~") + "diffeo"
        cells[key] += 1
    flag_counts = {}
    for r in ok:
        for k, v in r.flags.items():
            if isinstance(v, bool) and v:
                flag_counts[k] = flag_counts.get(k, 0) + 1
    return {
        "trials": len(records),
        "failed": len(records) - len(ok),
        "flag_counts": dict(sorted(flag_counts.items())),
        "candidates_raw": sum(r.status == CANDIDATE for r in records),
        "candidates_surviving": sum(_surviving(r, "candidate") for r in records),
        "pd_certificate": {
            "applicable": sum(r.pd_certificate_applicable for r in ok),
            "violations_raw": sum(r.pd_certificate_violation for r in ok),
            "violations": sum(_surviving(r, "pd_certificate_violation") for r in ok),
        },
        "implication": {
            "da_nondeg": sum(bool(r.flags["da_nondeg"]) for r in ok),
            "violations_raw": sum(r.implication_violation for r in ok),
            "violations": sum(_surviving(r, "implication_violation") for r in ok),
        },
        "cells": cells,
    }


def _check_writable(path):
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK) or \
            (path.exists() and not os.access(path, os.W_OK)):
        raise OSError(f"cannot write report to {path}")


CSV_FLAGS = ("pseudoconvex", "generating", "levi_nondeg", "segre_rank", "guard",
             "stationary_minimal", "da_nondeg", "da_strongly", "diffeo", "sym_part_pd",
             "defective")
CSV_MARGINS = ("minimality_sv", "da_rel_min_abs_eig", "block_margin", "sym_part_min_eig",
               "guard_margin")


def report_csv(report):
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial_id", "kind", "n", "d", *CSV_FLAGS, *CSV_MARGINS, "verdict", "wall_ms"])
    wall = report["header"].get("wall_ms", [])
    for t in report["trials"]:
        ms = wall[t["trial_id"]] if t["trial_id"] < len(wall) else ""
        w.writerow([t["trial_id"], t["kind"], t["n"], t["d"],
                    *[t["flags"].get(k) for k in CSV_FLAGS],
                    *[t["margins"].get(k) for k in CSV_MARGINS],
                    t["status"], f"{ms:.3f}" if ms != "" else ""])
    return buf.getvalue()


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True)


def run_experiment(config):
    """Run a campaign; returns ``(report, exit_code)`` and writes the output file.

    Exit code 2 signals at least one counterexample candidate that survived
    the quarantine re-run, 0 otherwise.
    """
    if config.output_path:
        _check_writable(config.output_path)
    jobs = [(config, i) for i in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_timed, jobs))
    else:
        results = [_timed(j) for j in jobs]
    records = [r for r, _ in results]
    summary = summarize(records)
    report = {
        "schema": SCHEMA_ID,
        "header": {
            "created": datetime.now(timezone.utc).isoformat(),
            "wall_ms": [round(ms, 3) for _, ms in results],
        },
        "config": config.echo(),
        "trials": [r.to_dict() for r in records],
        "summary": summary,
        "candidates": [r.to_dict() for r in records if _surviving(r, "candidate")],
    }
    validate_report(report)
    if config.output_path:
        text = report_csv(report) if config.format == "csv" else dumps_report(report)
        Path(config.output_path).write_text(text)
    code = 2 if summary["candidates_surviving"] else 0
    return report, code
