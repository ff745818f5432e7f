"""The 1-jet map ``(a, V) -> (V, m(a, V), Im a)`` at ``zeta = 1`` and its
Jacobian, analytic and by finite differences.

``m_j = V^H (I - X^H) K_j (I - X) V``. The map is a local diffeomorphism
exactly when the ``d x d`` block ``dm_j / d Re a_s`` is invertible.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import equations, linalg
from .exceptions import InvalidInputError, RegimeError, StepTooLargeError
from .linalg import DEFAULT_RANK_TOL, Definiteness

SERIES_TAIL_TOL = 1e-13
JET_IMAG_TOL = 1e-12
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class JetValue:
    V: np.ndarray
    m: np.ndarray
    im_a: np.ndarray


def _params(Q, a, b):
    if isinstance(a, equations.DiscParameters):
        return a
    return equations.disc_parameters(Q, a, b)


def _m_values(Q, X, V):
    I = np.eye(Q.n)
    w = (I - X) @ V
    m = np.array([w.conj() @ equations.stein_K(X, A) @ w for A in Q.matrices])
    return m


def jet_map(Q, a, b, V, force=False):
    params = _params(Q, a, b)
    V = linalg.as_complex_vector(V, "V")
    if V.size != Q.n:
        raise InvalidInputError(f"V must have {Q.n} entries, got {V.size}")
    X = equations.solve_X(Q, params, None, force=force).X
    m = _m_values(Q, X, V)
    imag = np.max(np.abs(m.imag))
    scale = max(1.0, float(np.max(np.abs(m))))
    assert imag <= JET_IMAG_TOL * scale, f"jet values not real: |Im m| = {imag:.3e}"
    return JetValue(V=V, m=m.real.copy(), im_a=params.a.imag.copy())


def jacobian_block_analytic(Q, a, b, V, tail_tol=SERIES_TAIL_TOL, solution=None):
    """``(dm_j / d Re a_s)_{j,s}`` from the derivative formula

    ``-2 Re sum_r V^H (I - X^H)^2 X^H^r K_j X_s X^r V``

    where ``X_s = dX / d Re a_s`` solves the linearized matrix equation.
    """
    params = _params(Q, a, b)
    V = linalg.as_complex_vector(V, "V")
    if solution is None:
        solution = equations.solve_X(Q, params, None)
    X = solution.X
    n, d = Q.n, Q.d
    I = np.eye(n)
    K = [equations.stein_K(X, A) for A in Q.matrices]
    N = [equations.dX_dRe_a(Q, params, None, s, solution=solution) for s in range(d)]

    q = linalg.spectral_norm(X)
    if q >= 1:
        raise RegimeError(f"||X|| = {q:.6f} >= 1")
    u = (I - X) @ (I - X) @ V            # X^r (I-X)^2 V after r steps
    w = V.copy()                         # X^r V
    pref = (np.linalg.norm(u) * np.linalg.norm(w)
            * max(linalg.spectral_norm(k) for k in K)
            * max(linalg.spectral_norm(m) for m in N) / (1 - q ** 2))
    total = np.zeros((d, d), dtype=complex)
    r = 0
    while True:
        Z = np.stack([k @ u for k in K], axis=1)       # columns K_j u_r
        Y = np.stack([m @ w for m in N], axis=1)       # columns N_s w_r
        total += Z.conj().T @ Y
        r += 1
        if pref * q ** (2 * r) < tail_tol or not np.any(w):
            break
        u, w = X @ u, X @ w
    return -2 * total.real


def _guarded_m(Q, a, b, V):
    if not equations.contraction_guard(Q, a, b):
        raise StepTooLargeError(
            "finite-difference stencil leaves the contraction guard; reduce the step")
    X = equations.solve_X(Q, a, b).X
    return _m_values(Q, X, V).real


def default_step(Q, a, b):
    """``1e-5 * max(1, ||a||)`` measured in the natural unit of ``a``.

    Derivatives of ``m`` in ``a`` grow like powers of
    ``kappa = ||Acoef^{-1}|| max_j ||A_j||``, so the step is divided by
    ``max(1, kappa)``; truncation and rounding errors then both stay near
    ``1e-10`` relative, also for badly conditioned ``Acoef``.
    """
    params = _params(Q, a, b)
    kappa = (linalg.spectral_norm(params.Acoef_inv)
             * max(linalg.spectral_norm(A) for A in Q.matrices))
    return DEFAULT_FD_STEP * max(1.0, float(np.linalg.norm(params.a))) / max(1.0, kappa)


def jacobian_block_fd(Q, a, b, V, step=None, richardson=False):
    """Central differences of ``m`` in each ``Re a_s``."""
    a = linalg.as_complex_vector(a, "a")
    V = linalg.as_complex_vector(V, "V")
    h = default_step(Q, a, b) if step is None else step

    def central(hh):
        cols = []
        for s in range(Q.d):
            e = np.zeros(Q.d)
            e[s] = hh
            cols.append((_guarded_m(Q, a + e, b, V) - _guarded_m(Q, a - e, b, V)) / (2 * hh))
        return np.column_stack(cols)

    D = central(h)
    if richardson:
        D = (4 * central(h / 2) - D) / 3
    return D


def _full_map(Q, b, x):
    """Realified 1-jet map on ``x = (Re a, Im a, Re V, Im V)``."""
    d, n = Q.d, Q.n
    a = x[:d] + 1j * x[d:2 * d]
    V = x[2 * d:2 * d + n] + 1j * x[2 * d + n:]
    m = _guarded_m(Q, a, b, V)
    return np.concatenate([V.real, V.imag, m, a.imag])


def full_jacobian_fd(Q, a, b, V, step=None):
    """``(2n+2d) x (2n+2d)`` FD Jacobian of ``(Re V, Im V, m, Im a)`` with
    respect to ``(Re a, Im a, Re V, Im V)``."""
    a = linalg.as_complex_vector(a, "a")
    V = linalg.as_complex_vector(V, "V")
    if step is None:
        step = default_step(Q, a, b)
    x0 = np.concatenate([a.real, a.imag, V.real, V.imag])
    size = x0.size
    J = np.empty((size, size))
    for k in range(size):
        e = np.zeros(size)
        e[k] = step
        J[:, k] = (_full_map(Q, b, x0 + e) - _full_map(Q, b, x0 - e)) / (2 * step)
    return J


@dataclass
class JetReport:
    analytic_block: np.ndarray
    fd_block: np.ndarray
    block_rel_error: float
    full_fd_jacobian: np.ndarray | None
    diffeo: bool
    condition: float
    margin: float
    definiteness_of_sym_part: Definiteness
    structure_residual: float | None
    full_rank: int | None
    tolerances: dict

    def to_dict(self):
        return {
            "analytic_block": self.analytic_block.tolist(),
            "fd_block": None if self.fd_block is None else self.fd_block.tolist(),
            "block_rel_error": self.block_rel_error,
            "full_fd_jacobian": (None if self.full_fd_jacobian is None
                                 else self.full_fd_jacobian.tolist()),
            "diffeo": self.diffeo,
            "condition": self.condition,
            "margin": self.margin,
            "definiteness_of_sym_part": self.definiteness_of_sym_part.value,
            "structure_residual": self.structure_residual,
            "full_rank": self.full_rank,
            "tolerances": self.tolerances,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2)


def block_verdict(block, tol=DEFAULT_RANK_TOL):
    """``(diffeo, condition, margin, definiteness of the symmetric part)``."""
    s = np.linalg.svd(block, compute_uv=False)
    margin = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    sym = (block + block.T) / 2
    cls = linalg.definiteness(sym, tol) if np.any(sym) else Definiteness.SINGULAR
    return margin > tol, cond, margin, cls


def structure_residual(J, n, d):
    """Deviation of the FD Jacobian from its forced block structure."""
    rows_V = J[:2 * n]
    rows_ima = J[2 * n + d:]
    expect_V = np.hstack([np.zeros((2 * n, 2 * d)), np.eye(2 * n)])
    expect_ima = np.hstack([np.zeros((d, d)), np.eye(d), np.zeros((d, 2 * n))])
    return float(max(np.max(np.abs(rows_V - expect_V)), np.max(np.abs(rows_ima - expect_ima))))


def local_diffeo_verdict(Q, a, b, V, tol=DEFAULT_RANK_TOL, step=None, full=True):
    """Decide local diffeomorphism on the analytic block; FD data is diagnostic."""
    a = linalg.as_complex_vector(a, "a")
    analytic = jacobian_block_analytic(Q, a, b, V)
    diffeo, cond, margin, cls = block_verdict(analytic, tol)
    if step is None:
        step = default_step(Q, a, b)
    fd = jacobian_block_fd(Q, a, b, V, step=step)
    scale = max(np.linalg.norm(analytic), np.finfo(float).tiny)
    rel = float(np.linalg.norm(analytic - fd) / scale)
    J = rank = struct = None
    if full:
        J = full_jacobian_fd(Q, a, b, V, step=step)
        struct = structure_residual(J, Q.n, Q.d)
        rank = linalg.numerical_rank(J, tol)
    return JetReport(
        analytic_block=analytic,
        fd_block=fd,
        block_rel_error=rel,
        full_fd_jacobian=J,
        diffeo=diffeo,
        condition=cond,
        margin=margin,
        definiteness_of_sym_part=cls,
        structure_residual=struct,
        full_rank=rank,
        tolerances={"rank_tol": tol,
                    "fd_step": step,
                    "series_tail_tol": SERIES_TAIL_TOL},
    )
