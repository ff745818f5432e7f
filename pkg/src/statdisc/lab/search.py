"""Search for disc parameters ``(a, V)`` at which a strongly pseudoconvex
quadric is stationary minimal.

Stage 1 draws a small real ``a0`` and a unit ``V`` until the ``A_j``
restricted to the orbit of ``V`` under ``P = sum a0_j A_j`` are R-independent.
Stage 2 scans ``a = lam * a0`` over a logarithmic grid of ``lam`` (smallest
first) with the orbit of ``X(a)``. Stage 3 falls back to random complex ``a``.
All work happens in coordinates where ``sum b_j A_j = I``.
"""

from dataclasses import dataclass

import numpy as np

from .. import discs, equations, linalg, quadric
from ..exceptions import PreconditionError, StatdiscError
from ..linalg import DEFAULT_RANK_TOL

LAMBDA_GRID = np.logspace(-3, 0, 32)


@dataclass
class SearchResult:
    found: bool
    a: np.ndarray | None = None
    V: np.ndarray | None = None
    stage: int | None = None
    lam: float | None = None
    certificate: discs.MinimalityCertificate | None = None
    evaluations: int = 0
    stage1_hits: int = 0


def _initial_radius(Qn, b, a_dir):
    r = 0.25
    while r > 1e-8:
        try:
            if equations.contraction_guard(Qn, r * a_dir, b):
                return r
        except PreconditionError:
            pass
        r /= 2
    return r


def search_stationary_minimal(Q, b, budget=10_000, seed=0, tol=DEFAULT_RANK_TOL,
                              stage1_share=0.8):
    """Find ``(a, V)`` with a minimality certificate; ``found=False`` after ``budget``
    candidate evaluations."""
    b = linalg.as_real_vector(b, "b")
    if not quadric.strongly_pseudoconvex_at(Q, b, tol):
        raise PreconditionError("search needs sum b_j A_j positive definite")
    Qn, C = quadric.normalize(Q, b)
    rng = np.random.default_rng(seed)
    n, d = Q.n, Q.d
    result = SearchResult(found=False)

    def certify(a, Vn, stage, lam=None):
        V = C @ Vn
        try:
            cert = discs.stationary_minimal(Q, a, b, V, tol)
        except StatdiscError:
            return False
        if not cert.minimal:
            return False
        result.found, result.a, result.V = True, a, V
        result.stage, result.lam, result.certificate = stage, lam, cert
        return True

    stage1_budget = int(budget * stage1_share)
    while result.evaluations < stage1_budget:
        a_dir = rng.standard_normal(d)
        a_dir /= np.linalg.norm(a_dir)
        a0 = _initial_radius(Qn, b, a_dir) * a_dir
        Vn = linalg.random_unit_vector(rng, n)
        P = Qn.combination(a0)
        result.evaluations += 1
        orbit = discs.orbit_space(P, Vn)
        if not discs.restricted_independence(Qn, orbit.basis, tol).minimal:
            continue
        result.stage1_hits += 1
        for lam in LAMBDA_GRID:
            if result.evaluations >= budget:
                return result
            a = lam * a0
            result.evaluations += 1
            try:
                ok = discs.stationary_minimal(Qn, a, b, Vn, tol).minimal
            except StatdiscError:
                continue
            if ok and certify(a.astype(complex), Vn, 2, float(lam)):
                return result

    while result.evaluations < budget:
        a_dir = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        a_dir /= np.linalg.norm(a_dir)
        a = _initial_radius(Qn, b, a_dir) * rng.uniform(0.05, 1.0) * a_dir
        Vn = linalg.random_unit_vector(rng, n)
        result.evaluations += 1
        try:
            ok = discs.stationary_minimal(Qn, a, b, Vn, tol).minimal
        except StatdiscError:
            continue
        if ok and certify(a, Vn, 3):
            return result
    return result
