"""Seeded random quadrics with class guarantees, and admissible disc parameters."""

from dataclasses import dataclass

import numpy as np

from .. import equations, linalg, quadric
from ..exceptions import GenerationError
from ..quadric import QuadricModel

KINDS = ("pseudoconvex", "strongly-nondeg-indefinite", "levi-degenerate")
MAX_RETRIES = 50


def _pseudoconvex(rng, n, d):
    # A_1 dominant and positive definite, the rest GUE-like
    A1 = np.eye(n) + 0.5 * linalg.random_hermitian(rng, n)
    mats = [A1] + [linalg.random_hermitian(rng, n) for _ in range(d - 1)]
    C = linalg.random_congruence(rng, n, max_condition=3.0)
    return QuadricModel([C.conj().T @ M @ C for M in mats])


def _traceless(rng, n, d):
    mats = []
    for _ in range(d):
        H = linalg.random_hermitian(rng, n)
        H = H - np.trace(H).real / n * np.eye(n)
        mats.append(H / linalg.spectral_norm(H))
    return QuadricModel(mats)


def _degenerate(rng, n, d):
    u = linalg.random_unit_vector(rng, n)
    proj = np.eye(n) - np.outer(u, u.conj())
    return QuadricModel([proj @ linalg.random_hermitian(rng, n) @ proj for _ in range(d)])


def random_quadric(kind, n, d, seed, tol=linalg.DEFAULT_RANK_TOL):
    """Deterministic quadric of the requested class.

    ``pseudoconvex``: Levi generating with a positive definite combination.
    ``strongly-nondeg-indefinite``: Levi generating, traceless (so no
    combination can be positive definite) with an invertible combination.
    ``levi-degenerate``: the ``A_j`` share a kernel vector.
    """
    if kind not in KINDS:
        raise GenerationError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if n < 1 or d < 1:
        raise GenerationError("n and d must be positive")
    rng = np.random.default_rng(seed)
    if kind == "pseudoconvex":
        if d > n * n:
            raise GenerationError(f"no Levi generating tuple of {d} matrices of order {n}")
        for _ in range(MAX_RETRIES):
            Q = _pseudoconvex(rng, n, d)
            if (quadric.validate(Q, tol=tol).generating
                    and quadric.find_positive_combination(Q, budget=20, seed=seed) is not None):
                return Q
    elif kind == "strongly-nondeg-indefinite":
        if n < 2 or d > n * n - 1:
            raise GenerationError(
                f"no traceless Levi generating tuple of {d} matrices of order {n}")
        for _ in range(MAX_RETRIES):
            Q = _traceless(rng, n, d)
            if (quadric.validate(Q, tol=tol).generating
                    and invertible_combination(Q, rng) is not None
                    and quadric.find_positive_combination(Q, budget=20, seed=seed) is None):
                return Q
    else:
        if n < 2:
            # a 1x1 quadric with a common kernel is the zero quadric
            return QuadricModel([np.zeros((1, 1))] * d)
        for _ in range(MAX_RETRIES):
            Q = _degenerate(rng, n, d)
            if not quadric.levi_nondegenerate(Q, tol):
                return Q
    raise GenerationError(f"could not generate a {kind} quadric with n={n}, d={d}")


def invertible_combination(Q, rng, tries=64, min_rel_sv=1e-2):
    """Best-conditioned unit ``b`` among random draws, or ``None``."""
    best, best_score = None, min_rel_sv
    for _ in range(tries):
        b = rng.standard_normal(Q.d)
        b /= np.linalg.norm(b)
        s = np.linalg.svd(Q.combination(b), compute_uv=False)
        score = s[-1] / s[0] if s[0] > 0 else 0.0
        if score > best_score:
            best, best_score = b, score
    return best


def choose_b(Q, kind, seed):
    """A ``b`` suited to the class: positive definite combination for
    pseudoconvex quadrics, a well-conditioned invertible one otherwise."""
    if kind == "pseudoconvex":
        b = quadric.find_positive_combination(Q, budget=50, seed=seed)
        if b is not None:
            return b
    rng = np.random.default_rng([seed, 1])
    return invertible_combination(Q, rng)


def admissible_a(Q, b, rng, radius, real=False, max_halvings=30):
    """Random ``a`` with ``||a|| <= radius`` passing the contraction guard.

    The norm is drawn from ``[radius/5, radius]`` and halved until the guard
    holds. Returns ``None`` if ``Acoef`` is singular.
    """
    a = rng.standard_normal(Q.d) + (0 if real else 1j * rng.standard_normal(Q.d))
    a = a / np.linalg.norm(a) * radius * rng.uniform(0.2, 1.0)
    for _ in range(max_halvings):
        try:
            if equations.contraction_guard(Q, a, b):
                return a
        except equations.PreconditionError:
            pass
        a = a / 2
    return None


@dataclass
class Instance:
    Q: QuadricModel
    a: np.ndarray
    b: np.ndarray
    V: np.ndarray
    kind: str


def random_instance(seed, n, d, kind="pseudoconvex", a_radius=0.05, v_max=2.0):
    """A guard-passing ``(Q, a, b, V)`` with ``||a|| <= a_radius`` and ``||V|| <= v_max``."""
    Q = random_quadric(kind, n, d, seed)
    b = choose_b(Q, kind, seed)
    if b is None:
        raise GenerationError("no invertible combination found")
    rng = np.random.default_rng([seed, 2])
    a = admissible_a(Q, b, rng, a_radius)
    if a is None:
        raise GenerationError("no guard-passing a found")
    V = linalg.random_unit_vector(rng, n) * rng.uniform(0.5, v_max)
    return Instance(Q, a, b, V, kind)


def kernel_vector(Q, b, rng, imag_tol=1e-10):
    """Unit ``V`` with ``sum lam_j A_j V = 0`` for some real ``lam != 0``.

    Uses a real eigenpair of ``S^{-1} A_k`` with ``S = sum b_j A_j`` and a
    random ``k``, so ``D_0(V)`` is R-rank deficient. Real eigenvalues are
    guaranteed when ``S`` is positive definite; ``None`` if none exists.
    """
    if Q.d < 2:
        return None
    S = Q.combination(b)
    for k in rng.permutation(Q.d):
        if np.allclose(np.eye(Q.d)[k], b / np.linalg.norm(b)):
            continue
        w, U = np.linalg.eig(np.linalg.solve(S, Q.matrices[k]))
        real = np.flatnonzero(np.abs(w.imag) <= imag_tol * max(1.0, np.max(np.abs(w))))
        if real.size:
            i = rng.choice(real)
            V = U[:, i]
            return V / np.linalg.norm(V)
    return None
