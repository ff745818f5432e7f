"""Solvers for the quadratic matrix equation ``P X^2 + A X + P^H = 0``, the
Stein equations for ``K_j`` and the derivative of ``X`` in ``Re a``.

Here ``P = sum a_j A_j`` and ``A = sum (b_j - 2 Re a_j) A_j`` for disc
parameters ``a`` (complex, small) and ``b`` (real).
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .exceptions import (
    InvalidInputError,
    IterationLimitError,
    PreconditionError,
    RegimeError,
    SingularOperatorError,
)
from .linalg import DEFAULT_RANK_TOL, spectral_norm

log = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-14
MAX_ITERATIONS = 500
RESIDUAL_TOL = 1e-12
STEIN_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class DiscParameters:
    a: np.ndarray
    b: np.ndarray
    P: np.ndarray
    Acoef: np.ndarray

    @property
    def Acoef_inv(self):
        return np.linalg.inv(self.Acoef)


def disc_parameters(Q, a, b, tol=DEFAULT_RANK_TOL):
    """Build ``P`` and ``Acoef`` for ``(a, b)``, checking ``Acoef`` is invertible."""
    a = linalg.as_complex_vector(a, "a")
    b = linalg.as_real_vector(b, "b")
    if a.size != Q.d or b.size != Q.d:
        raise InvalidInputError(f"a and b must have {Q.d} entries")
    P = Q.combination(a)
    Acoef = Q.combination(b - 2 * a.real)
    Acoef = (Acoef + Acoef.conj().T) / 2
    if linalg.numerical_rank(Acoef, tol) < Q.n:
        raise PreconditionError("Acoef = sum (b_j - 2 Re a_j) A_j is singular")
    return DiscParameters(linalg.frozen(a), linalg.frozen(b), linalg.frozen(P),
                          linalg.frozen(Acoef))


@dataclass(frozen=True)
class GuardReport:
    """Contraction certificate for the fixed-point map ``X -> -Acoef^{-1}(P X^2 + P^H)``.

    With ``alpha = ||Acoef^{-1} P||`` and ``beta = ||Acoef^{-1} P^H||`` the map
    sends the ball of radius ``rho`` into itself and contracts there when
    ``alpha rho^2 + beta <= rho`` and ``2 alpha rho < 1``. The smallest such
    radius is ``rho* = (1 - sqrt(1 - 4 alpha beta)) / (2 alpha)``; the guard
    passes when ``4 alpha beta < 1`` and ``rho* < 1``.
    """

    ok: bool
    alpha: float
    beta: float
    discriminant: float
    radius: float
    inequality: str = "4*alpha*beta < 1 and rho* < 1"

    @property
    def margin(self):
        return min(self.discriminant, 1.0 - self.radius)


def guard_report(Q, a, b):
    params = a if isinstance(a, DiscParameters) else disc_parameters(Q, a, b)
    Ainv = params.Acoef_inv
    alpha = spectral_norm(Ainv @ params.P)
    beta = spectral_norm(Ainv @ params.P.conj().T)
    disc = 1.0 - 4.0 * alpha * beta
    if alpha == 0.0:
        radius = beta
    elif disc > 0:
        radius = (1.0 - np.sqrt(disc)) / (2.0 * alpha)
    else:
        radius = np.inf
    return GuardReport(bool(disc > 0 and radius < 1), alpha, beta, disc, float(radius))


def contraction_guard(Q, a, b):
    """True when the fixed-point iteration is provably a contraction into ``||X|| < 1``."""
    return guard_report(Q, a, b).ok


@dataclass(frozen=True, eq=False)
class MatrixEquationSolution:
    X: np.ndarray
    residual_norm: float
    iterations: int
    norm_X: float
    method: str = "fixed-point"


def equation_residual(params, X):
    P, Acoef = params.P, params.Acoef
    return float(np.linalg.norm(P @ X @ X + Acoef @ X + P.conj().T))


def _residual_bound(params):
    return RESIDUAL_TOL * (spectral_norm(params.P) + spectral_norm(params.Acoef) + 1)


def _newton(params, X, max_iter=50):
    P, Acoef, Ph = params.P, params.Acoef, params.P.conj().T
    bound = _residual_bound(params)
    for k in range(1, max_iter + 1):
        F = P @ X @ X + Acoef @ X + Ph
        if np.linalg.norm(F) <= bound / 10:
            return X, k
        # F'(X)[H] = Acoef H + P (H X + X H)
        X = X - linalg.solve_operator_equation(Acoef, P, X, F)
    return X, max_iter


def solve_X(Q, a, b, force=False, tol=FIXED_POINT_TOL, max_iter=MAX_ITERATIONS):
    """Solve ``P X^2 + Acoef X + P^H = 0`` for the solution with ``||X|| < 1``.

    Fixed-point iteration ``X <- -Acoef^{-1}(P X^2 + P^H)`` from
    ``X_0 = -Acoef^{-1} P^H``; falls back to Newton on the flattened system
    if the iteration stalls. Refuses to run outside the contraction guard
    unless ``force`` is set.
    """
    params = a if isinstance(a, DiscParameters) else disc_parameters(Q, a, b)
    n = Q.n
    if not np.any(params.a):
        return MatrixEquationSolution(linalg.frozen(np.zeros((n, n), complex)), 0.0, 0, 0.0)
    guard = guard_report(Q, params, None)
    if not guard.ok and not force:
        raise RegimeError(
            f"contraction guard failed ({guard.inequality}: 4ab={4 * guard.alpha * guard.beta:.3e},"
            f" rho*={guard.radius:.3e}); pass force=True to try anyway")

    Ainv = params.Acoef_inv
    AP = Ainv @ params.P
    APh = Ainv @ params.P.conj().T
    X = -APh
    method = "fixed-point"
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        X_new = -(AP @ X @ X + APh)
        step = np.linalg.norm(X_new - X)
        X = X_new
        if not np.all(np.isfinite(X)):
            break
        if step < tol * max(1.0, np.linalg.norm(X)):
            converged = True
            break
    bound = _residual_bound(params)
    if not converged:
        if not np.all(np.isfinite(X)):
            X = -APh
        log.info("fixed point stalled after %d iterations; switching to Newton", iterations)
        try:
            X, k = _newton(params, X)
        except SingularOperatorError as exc:
            raise IterationLimitError(f"Newton fallback failed: {exc}",
                                      residual=equation_residual(params, X),
                                      iterations=iterations) from exc
        iterations += k
        method = "newton"
    residual = equation_residual(params, X)
    if not residual <= bound:
        # one Newton polish step usually recovers the last digits
        try:
            X, _ = _newton(params, X, max_iter=2)
        except SingularOperatorError:
            pass
        residual = equation_residual(params, X)
    if not residual <= bound:
        raise IterationLimitError(
            f"residual {residual:.3e} above {bound:.3e} after {iterations} iterations",
            residual=residual, iterations=iterations)
    norm_X = spectral_norm(X)
    if norm_X >= 1:
        raise RegimeError(f"solution has ||X|| = {norm_X:.6f} >= 1")
    return MatrixEquationSolution(linalg.frozen(X), residual, iterations, norm_X, method)


def stein_K(X, A, tol=STEIN_TOL, max_iter=100_000):
    """Solve ``K = A + X^H K X`` (equivalently ``K = sum_r X^H^r A X^r``)."""
    X = linalg.as_complex_matrix(X, "X")
    A = linalg.as_hermitian(A, "A")
    q = spectral_norm(X)
    if q >= 1:
        raise RegimeError(f"||X|| = {q:.6f} >= 1; the Stein series diverges")
    if not np.any(X):
        return A.copy()
    Xh = X.conj().T
    K = A.copy()
    scale = max(1.0, np.linalg.norm(A))
    for _ in range(max_iter):
        K_new = A + Xh @ K @ X
        step = np.linalg.norm(K_new - K)
        K = K_new
        if step < tol * scale:
            break
    else:
        raise IterationLimitError("Stein iteration did not converge", residual=step)
    return (K + K.conj().T) / 2


def stein_K_series(X, A, terms):
    """Truncated series ``sum_{r < terms} X^H^r A X^r`` (test oracle)."""
    X = np.asarray(X, complex)
    K = np.zeros_like(X)
    Xr = np.eye(X.shape[0], dtype=complex)
    for _ in range(terms):
        K += Xr.conj().T @ A @ Xr
        Xr = Xr @ X
    return K


def dX_dRe_a(Q, a, b, s, solution=None):
    """Derivative of ``X`` with respect to ``Re a_s`` (0-based ``s``).

    Solves ``Acoef N + P (N X + X N) = -A_s (I - X)^2``.
    """
    params = a if isinstance(a, DiscParameters) else disc_parameters(Q, a, b)
    if not 0 <= s < Q.d:
        raise InvalidInputError(f"index s={s} out of range for d={Q.d}")
    if solution is None:
        solution = solve_X(Q, params, None)
    X = solution.X
    I = np.eye(Q.n)
    rhs = -Q.matrices[s] @ (I - X) @ (I - X)
    return linalg.solve_operator_equation(params.Acoef, params.P, X, rhs)


def phi(P, X, N):
    """``N + P (N X + X N)``."""
    return N + P @ (N @ X + X @ N)


def phi_inverse_series(P, X, N, order=None, tail_tol=1e-12):
    """Neumann-series inverse of ``phi`` (normalized regime, ``Acoef = I``).

    Sums ``sum_{k <= order} (-E)^k N`` with ``E(N) = P (N X + X N)``. The
    geometric ratio ``e = 2 ||P|| ||X||`` must be below one; with
    ``order=None`` the order is chosen so that the tail ``e^{k+1}/(1-e)``
    falls below ``tail_tol`` relative to ``||N||``.
    """
    P, X, N = (np.asarray(m, complex) for m in (P, X, N))
    e = 2 * spectral_norm(P) * spectral_norm(X)
    if e >= 1:
        raise RegimeError(f"Neumann ratio 2||P|| ||X|| = {e:.3e} >= 1")
    if order is None:
        order = 0
        while e ** (order + 1) / (1 - e) >= tail_tol and order < 10_000:
            order += 1
    term = N.copy()
    total = N.copy()
    for _ in range(order):
        term = -(P @ (term @ X + X @ term))
        total = total + term
    return total
