"""Explicit stationary-disc lifts attached to model quadrics.

A lift ``(h, g, h~, g~)`` is determined by ``(a, b, V)`` through the solution
``X`` of the quadratic matrix equation and the Stein solutions ``K_j``.
Boundary values are evaluated in closed form; holomorphy of the companion
``h~`` is certified numerically from the Fourier modes of boundary samples.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import equations, linalg
from .exceptions import InvalidInputError
from .linalg import DEFAULT_RANK_TOL, Definiteness

UNIT_CIRCLE_TOL = 1e-12
SERIES_TAIL_TOL = 1e-13
ORBIT_STALL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class StationaryLift:
    Q: object
    params: equations.DiscParameters
    V: np.ndarray
    solution: equations.MatrixEquationSolution
    K: tuple

    @property
    def X(self):
        return self.solution.X

    @property
    def n(self):
        return self.Q.n

    @property
    def d(self):
        return self.Q.d


def build_lift(Q, a, b, V, force=False):
    params = equations.disc_parameters(Q, a, b)
    V = linalg.as_complex_vector(V, "V")
    if V.size != Q.n:
        raise InvalidInputError(f"V must have {Q.n} entries, got {V.size}")
    sol = equations.solve_X(Q, params, None, force=force)
    K = tuple(linalg.frozen(equations.stein_K(sol.X, A)) for A in Q.matrices)
    return StationaryLift(Q, params, linalg.frozen(V), sol, K)


def _boundary_arrays(L, zetas):
    """Vectorized closed-form boundary values for an array of ``zeta``."""
    zetas = np.asarray(zetas, dtype=complex).reshape(-1)
    n, X, V = L.n, L.X, L.V
    I = np.eye(n)
    a, b = L.params.a, L.params.b
    A = L.Q.stack
    w = (I - X) @ V
    # (I - zeta X)^{-1} (I - X) V for every zeta
    M = I[None] - zetas[:, None, None] * X[None]
    R = np.linalg.solve(M, np.broadcast_to(w, (zetas.size, n))[..., None])[..., 0]
    # at zeta = 1 the resolvent cancels exactly, so h(1) = 0 and h~(1) = 0 hold bit-for-bit
    R[zetas == 1] = V

    h = V[None] - zetas[:, None] * R

    Xh = X.conj().T
    VA = np.einsum("i,jik->jk", V.conj(), A)                 # rows V^H A_j
    const = np.array([
        np.real(V.conj() @ A[j] @ V) + V.conj() @ (Xh @ L.K[j] - L.K[j] @ X) @ V
        for j in range(L.d)
    ])
    left = np.array([V.conj() @ (I - Xh) @ L.K[j] for j in range(L.d)])  # rows V^H (I-X^H) K_j
    # (I + 2 zeta X (I - zeta X)^{-1})(I - X) V = w + 2 zeta X R
    right = w[None] + 2 * zetas[:, None] * (R @ X.T)
    g = (const[None]
         - 2 * zetas[:, None] * (R @ VA.T)
         + right @ left.T)

    # c_j(zeta) = a_j conj(zeta) + (b_j - 2 Re a_j) + conj(a_j) zeta
    c = (a[None] * zetas.conj()[:, None] + (b - 2 * a.real)[None]
         + a.conj()[None] * zetas[:, None])
    Cz = np.tensordot(c, A, axes=(1, 0))                      # (m, n, n)
    ht = -zetas[:, None] * np.einsum("mi,mik->mk", h.conj(), Cz)
    gt = (a[None] + (b - 2 * a.real)[None] * zetas[:, None]
          + a.conj()[None] * zetas[:, None] ** 2) / 2
    return h, g, ht, gt


def _check_unit(zetas):
    zetas = np.asarray(zetas, dtype=complex)
    dev = np.max(np.abs(np.abs(zetas) - 1.0)) if zetas.size else 0.0
    if dev > UNIT_CIRCLE_TOL:
        raise InvalidInputError(f"boundary evaluation needs |zeta| = 1 (deviation {dev:.2e})")
    return zetas


def eval_boundary(L, zeta):
    """Return ``(h, g, h~, g~)`` at a point of the unit circle."""
    _check_unit(zeta)
    h, g, ht, gt = _boundary_arrays(L, [zeta])
    return h[0], g[0], ht[0], gt[0]


@dataclass
class LiftVerification:
    attachment_residual: float
    holomorphy_defect: float
    endpoint_residual: float
    conormal_min_norm: float
    multiplier_imag_max: float
    samples: int
    holomorphy_by_group: dict

    def to_dict(self):
        return dict(self.__dict__)


def _negative_mode_ratio(values):
    """Largest negative-index Fourier coefficient over the largest coefficient.

    ``values`` holds samples at ``exp(2 pi i k / m)`` along axis 0; indices
    ``>= m/2`` are treated as negative modes.
    """
    m = values.shape[0]
    coeffs = np.abs(np.fft.fft(values, axis=0)) / m
    top = coeffs.max()
    if top == 0:
        return 0.0
    return float(coeffs[m // 2:].max() / top)


def boundary_samples(samples):
    return np.exp(2j * np.pi * np.arange(samples) / samples)


def verify_lift(L, samples=256):
    """Numerical certificate that ``L`` is a genuine lift of a stationary disc."""
    if samples < 64 or samples & (samples - 1):
        raise InvalidInputError("samples must be a power of two >= 64")
    zetas = boundary_samples(samples)
    h, g, ht, gt = _boundary_arrays(L, zetas)
    A = L.Q.stack

    levi = np.real(np.einsum("mi,jik,mk->mj", h.conj(), A, h))
    attachment = float(np.max(np.abs(g.real - levi)))

    groups = {"h": h, "g": g, "h_tilde": ht, "g_tilde": gt}
    by_group = {k: _negative_mode_ratio(v) for k, v in groups.items()}

    h1, g1, ht1, gt1 = _boundary_arrays(L, [1.0])
    endpoint = float(np.sqrt(
        np.sum(np.abs(h1) ** 2) + np.sum(np.abs(g1) ** 2) + np.sum(np.abs(ht1) ** 2)
        + np.sum(np.abs(gt1[0] - L.params.b / 2) ** 2)))

    c = 2 * gt / zetas[:, None]
    # d r_j(0) = dw_j / 2, so |sum c_j d r_j(0)| = |c| / 2
    conormal = float(np.min(np.linalg.norm(c, axis=1)) / 2)
    return LiftVerification(
        attachment_residual=attachment,
        holomorphy_defect=max(by_group.values()),
        endpoint_residual=endpoint,
        conormal_min_norm=conormal,
        multiplier_imag_max=float(np.max(np.abs(c.imag))),
        samples=samples,
        holomorphy_by_group=by_group,
    )


def eval_interior(L, z, samples=256):
    """Interior values from the truncated Taylor series of the boundary data."""
    zetas = boundary_samples(samples)
    arrays = _boundary_arrays(L, zetas)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1):
        raise InvalidInputError("interior evaluation needs |z| <= 1")
    powers = z.reshape(-1, 1) ** np.arange(samples // 2)[None]
    out = []
    for vals in arrays:
        coeffs = np.fft.fft(vals, axis=0)[: samples // 2] / samples
        out.append(powers @ coeffs)
    return tuple(out)


def boundary_trace_csv(L, samples=256):
    """CSV text: ``zeta_re, zeta_im`` then interleaved re/im of every component."""
    zetas = boundary_samples(samples)
    h, g, ht, gt = _boundary_arrays(L, zetas)
    names, cols = [], []
    for label, arr in (("h", h), ("g", g), ("h_tilde", ht), ("g_tilde", gt)):
        for k in range(arr.shape[1]):
            names += [f"{label}_{k + 1}_re", f"{label}_{k + 1}_im"]
            cols += [arr[:, k].real, arr[:, k].imag]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["zeta_re", "zeta_im"] + names)
    for i, zeta in enumerate(zetas):
        writer.writerow([repr(float(zeta.real)), repr(float(zeta.imag))]
                        + [repr(float(col[i])) for col in cols])
    return buf.getvalue()


def _cplx(arr):
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [_cplx(x) for x in arr]


def lift_to_dict(L, verification=None):
    out = {
        "parameters": {
            "a": _cplx(L.params.a),
            "b": [float(x) for x in L.params.b],
            "V": _cplx(L.V),
        },
        "quadric": L.Q.to_dict(),
        "X": _cplx(L.X),
        "X_residual": L.solution.residual_norm,
        "X_iterations": L.solution.iterations,
        "norm_X": L.solution.norm_X,
        "K": [_cplx(K) for K in L.K],
    }
    if verification is not None:
        out["verification"] = verification.to_dict()
    return out


def dump_lift(L, verification=None):
    return json.dumps(lift_to_dict(L, verification), indent=2)


@dataclass
class OrbitSpace:
    """Real orthonormal basis (as complex n-vectors) of ``span_R{V, XV, X^2 V, ...}``."""

    basis: np.ndarray        # (dim, n)
    dim: int
    powers_used: int

    def projection_defect(self, X):
        """Largest distance of ``X e_i`` from the real span of the basis."""
        if self.dim == 0:
            return 0.0
        B = linalg.realify(self.basis.T)
        Y = linalg.realify((X @ self.basis.T))
        return float(np.max(np.linalg.norm(Y - B @ (B.T @ Y), axis=0)))


def orbit_space(X, V, tol=ORBIT_STALL_TOL, max_powers=None):
    """Krylov basis over R of the X-orbit of V with rank-stall detection.

    Arnoldi over the realification: the next candidate is ``X e_last``, kept
    when its component orthogonal to the current span exceeds
    ``tol * ||X||``. The first stall means the span is X-invariant.
    """
    X = linalg.as_complex_matrix(X, "X")
    V = linalg.as_complex_vector(V, "V")
    n = V.size
    nv = np.linalg.norm(V)
    if nv == 0:
        raise InvalidInputError("V must be nonzero")
    cap = 2 * n + 1 if max_powers is None else max_powers
    normX = linalg.spectral_norm(X)
    Q = [np.concatenate([V.real, V.imag]) / nv]
    powers = 0
    while len(Q) < 2 * n and powers < cap and normX > 0:
        powers += 1
        w = X @ (Q[-1][:n] + 1j * Q[-1][n:])
        w = np.concatenate([w.real, w.imag])
        for _ in range(2):
            B = np.array(Q).T
            w = w - B @ (B.T @ w)
        r = np.linalg.norm(w)
        if r <= tol * normX:
            break
        Q.append(w / r)
    basis = np.array([q[:n] + 1j * q[n:] for q in Q])
    return OrbitSpace(basis=basis, dim=len(Q), powers_used=powers)


@dataclass
class MinimalityCertificate:
    minimal: bool
    rank: int
    smallest_singular_value: float
    orbit_dim: int

    def to_dict(self):
        return dict(self.__dict__)


def restricted_independence(Q, basis, tol=DEFAULT_RANK_TOL):
    """R-independence of the maps ``A_j`` restricted to the real span of ``basis``."""
    W = [np.concatenate([A @ e for e in basis]) for A in Q.matrices]
    R = linalg.realify(np.column_stack(W))
    rank = linalg.numerical_rank(R, tol)
    return MinimalityCertificate(rank == Q.d, rank, linalg.smallest_singular_value(R),
                                 len(basis))


def stationary_minimal(Q, a, b, V, tol=DEFAULT_RANK_TOL, solution=None, force=False):
    """Whether the ``A_j`` restricted to the X-orbit of V are R-linearly independent.

    Returns a ``MinimalityCertificate`` (truthiness is not overloaded; read
    ``.minimal``).
    """
    if solution is None:
        solution = equations.solve_X(Q, a, b, force=force)
    orbit = orbit_space(solution.X, V)
    return restricted_independence(Q, orbit.basis, tol)


def defective(L, tol=DEFAULT_RANK_TOL):
    """A lift is defective iff the quadric is not stationary minimal for ``h(0) = V``."""
    return not stationary_minimal(L.Q, L.params, None, L.V, tol, solution=L.solution).minimal


@dataclass
class DaCertificate:
    nondegenerate: bool
    strongly: bool
    classification: Definiteness
    matrix: np.ndarray
    terms: int
    tail_bound: float

    def to_dict(self):
        return {
            "nondegenerate": self.nondegenerate,
            "strongly": self.strongly,
            "classification": self.classification.value,
            "matrix": self.matrix.tolist(),
            "terms": self.terms,
            "tail_bound": self.tail_bound,
        }


def da_matrix(Q, params, X, V, tail_tol=SERIES_TAIL_TOL):
    """``Re sum_r V^H X^H^r A_j Acoef^{-1} A_s X^r V`` with its truncation data."""
    V = linalg.as_complex_vector(V, "V")
    Acoef = params.Acoef
    q = linalg.spectral_norm(X)
    if q >= 1:
        raise equations.RegimeError(f"||X|| = {q:.6f} >= 1")
    Ainv_norm = linalg.spectral_norm(np.linalg.inv(Acoef))
    amax = max(linalg.spectral_norm(A) for A in Q.matrices)
    pref = np.linalg.norm(V) ** 2 * amax ** 2 * Ainv_norm / (1 - q ** 2)
    M = np.zeros((Q.d, Q.d), dtype=complex)
    w = V.copy()
    r = 0
    tail = pref
    while True:
        D = np.stack([A @ w for A in Q.matrices], axis=1)
        M += D.conj().T @ np.linalg.solve(Acoef, D)
        r += 1
        w = X @ w
        tail = pref * q ** (2 * r)
        if tail < tail_tol or not np.any(w):
            if not np.any(w):
                tail = 0.0
            break
    M = np.real(M)
    return (M + M.T) / 2, r, float(tail)


def da_nondegenerate(Q, a, b, V, tol=DEFAULT_RANK_TOL, solution=None, force=False):
    params = a if isinstance(a, equations.DiscParameters) else equations.disc_parameters(Q, a, b)
    if solution is None:
        solution = equations.solve_X(Q, params, None, force=force)
    M, terms, tail = da_matrix(Q, params, solution.X, V)
    if not np.any(M):
        cls = Definiteness.SINGULAR
    else:
        cls = linalg.definiteness(M, tol)
    return DaCertificate(
        nondegenerate=cls is not Definiteness.SINGULAR,
        strongly=cls is Definiteness.POSITIVE_DEFINITE,
        classification=cls,
        matrix=M,
        terms=terms,
        tail_bound=tail,
    )
