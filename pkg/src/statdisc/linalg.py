"""Dense complex matrix kernels: validation, ranks, definiteness and the
linear solver for operators of the form ``N -> A N + P (N X + X N)``.
"""

from enum import Enum

import numpy as np

from .exceptions import InvalidInputError, SingularOperatorError

DEFAULT_RANK_TOL = 1e-8
MAX_OPERATOR_CONDITION = 1e12
HERMITIAN_TOL = 1e-12


class Definiteness(str, Enum):
    POSITIVE_DEFINITE = "positive-definite"
    NEGATIVE_DEFINITE = "negative-definite"
    INDEFINITE = "indefinite"
    SINGULAR = "singular"


def as_complex_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-d complex ndarray (a copy)."""
    arr = np.array(M, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or 0 in arr.shape:
        raise InvalidInputError(f"{name} must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def as_complex_vector(v, name="vector"):
    arr = np.array(v, dtype=complex).reshape(-1)
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def as_real_vector(v, name="vector"):
    arr = np.array(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(arr.imag != 0):
        raise InvalidInputError(f"{name} must be real")
    return arr.real.copy()


def as_hermitian(M, name="matrix", max_deviation=None):
    """Symmetrize ``M`` to ``(M + M^H) / 2``.

    With ``max_deviation`` set, a deviation ``max|M - M^H|`` above it is an
    error instead of being silently averaged away.
    """
    arr = as_complex_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {arr.shape}")
    if max_deviation is not None:
        dev = np.max(np.abs(arr - arr.conj().T))
        if dev > max_deviation:
            raise InvalidInputError(
                f"{name} deviates from Hermitian by {dev:.3e} > {max_deviation:.1e}")
    H = (arr + arr.conj().T) / 2
    assert np.array_equal(H, H.conj().T)
    return H


def frozen(arr):
    arr = np.array(arr)
    arr.flags.writeable = False
    return arr


def spectral_norm(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def realify(vectors):
    """Stack complex k-vectors as the columns ``[Re v; Im v]`` of a 2k x m real matrix."""
    V = np.asarray(vectors, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    return np.vstack([V.real, V.imag])


def numerical_rank(M, tol=DEFAULT_RANK_TOL):
    """Number of singular values above ``tol`` times the largest one."""
    if tol < 0:
        raise InvalidInputError("tol must be nonnegative")
    M = np.asarray(M)
    if M.size == 0:
        return 0
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def real_span_rank(vectors, tol=DEFAULT_RANK_TOL):
    """Dimension over R of the real span of a list of complex k-vectors."""
    vectors = list(vectors)
    if not vectors:
        return 0
    lengths = {np.asarray(v).size for v in vectors}
    if len(lengths) != 1:
        raise InvalidInputError(f"vectors have differing lengths {sorted(lengths)}")
    cols = np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in vectors])
    return numerical_rank(realify(cols), tol)


def smallest_singular_value(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def operator_matrix(A, P, X):
    """Dense n^2 x n^2 matrix of ``N -> A N + P (N X + X N)`` on row-major vec(N).

    Row-major vectorization gives ``vec(L N R) = kron(L, R^T) vec(N)``.
    """
    n = A.shape[0]
    eye = np.eye(n)
    return np.kron(A, eye) + np.kron(P, X.T) + np.kron(P @ X, eye)


def apply_operator(A, P, X, N):
    return A @ N + P @ (N @ X + X @ N)


def solve_operator_equation(A, P, X, rhs, max_condition=MAX_OPERATOR_CONDITION):
    """Solve ``A N + P (N X + X N) = rhs`` for ``N`` by one dense solve.

    Raises ``SingularOperatorError`` (carrying the condition estimate) when
    the induced operator is numerically singular.
    """
    A = as_complex_matrix(A, "A")
    P = as_complex_matrix(P, "P")
    X = as_complex_matrix(X, "X")
    rhs = as_complex_matrix(rhs, "rhs")
    n = A.shape[0]
    if any(m.shape != (n, n) for m in (P, X, rhs)):
        raise InvalidInputError("A, P, X and rhs must share one square shape")

    L = operator_matrix(A, P, X)
    cond = float(np.linalg.cond(L))
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularOperatorError(
            f"operator condition {cond:.3e} exceeds {max_condition:.1e}", condition=cond)
    b = rhs.reshape(-1)
    lu_solve = np.linalg.solve
    x = lu_solve(L, b)
    # one step of iterative refinement
    x = x + lu_solve(L, b - L @ x)
    N = x.reshape(n, n)

    residual = np.linalg.norm(apply_operator(A, P, X, N) - rhs)
    bound = 1e-12 * (np.linalg.norm(rhs) + 1)
    if residual > bound:
        raise SingularOperatorError(
            f"residual {residual:.3e} above {bound:.3e} after refinement", condition=cond)
    return N


def definiteness(M, tol=DEFAULT_RANK_TOL):
    """Classify a Hermitian (or real symmetric) matrix by eigenvalue signs.

    Eigenvalues with modulus at most ``tol * max|eig|`` count as zero.
    """
    M = as_complex_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError("definiteness needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL * scale:
        raise InvalidInputError("definiteness needs a Hermitian matrix")
    w = np.linalg.eigvalsh((M + M.conj().T) / 2)
    top = np.max(np.abs(w))
    if top == 0 or np.any(np.abs(w) <= tol * top):
        return Definiteness.SINGULAR
    if np.all(w > 0):
        return Definiteness.POSITIVE_DEFINITE
    if np.all(w < 0):
        return Definiteness.NEGATIVE_DEFINITE
    return Definiteness.INDEFINITE


def hermitian_inv_sqrt(S):
    """``S^{-1/2}`` for Hermitian positive definite ``S`` via eigendecomposition."""
    w, U = np.linalg.eigh(S)
    if np.any(w <= 0):
        raise InvalidInputError("matrix is not positive definite")
    return (U / np.sqrt(w)) @ U.conj().T


def random_unitary(rng, n):
    """Haar-distributed unitary via QR with phase correction."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def random_hermitian(rng, n, scale=1.0):
    """GUE-type sample normalized to spectral norm ``scale``."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = (Z + Z.conj().T) / 2
    norm = spectral_norm(H)
    return H * (scale / norm) if norm > 0 else H


def random_unit_vector(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_congruence(rng, n, max_condition=10.0):
    """Random invertible matrix with 2-norm condition number at most ``max_condition``."""
    U = random_unitary(rng, n)
    W = random_unitary(rng, n)
    s = np.exp(rng.uniform(0, np.log(max_condition), n))
    s[0], s[-1] = 1.0, (max_condition if n > 1 else 1.0)
    rng.shuffle(s)
    return (U * s) @ W
