"""Model quadrics ``Re w_j = z^H A_j z`` and their Levi-form classifications."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .exceptions import InvalidInputError, PreconditionError
from .linalg import DEFAULT_RANK_TOL, Definiteness

LOAD_HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadricModel:
    """A codimension-``d`` tuple of ``n x n`` Hermitian matrices.

    Matrices are symmetrized once on construction and stored read-only.
    """

    matrices: tuple

    def __init__(self, matrices):
        mats = [linalg.as_hermitian(M, name=f"A_{j + 1}") for j, M in enumerate(matrices)]
        if not mats:
            raise InvalidInputError("a quadric needs at least one matrix")
        n = mats[0].shape[0]
        if any(M.shape != (n, n) for M in mats):
            raise InvalidInputError("all matrices must have the same order")
        object.__setattr__(self, "matrices", tuple(linalg.frozen(M) for M in mats))

    @property
    def n(self):
        return self.matrices[0].shape[0]

    @property
    def d(self):
        return len(self.matrices)

    @property
    def stack(self):
        """The ``d x n x n`` array of matrices."""
        return np.stack(self.matrices)

    def combination(self, coeffs):
        """``sum_j coeffs_j A_j`` (complex coefficients allowed)."""
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if coeffs.size != self.d:
            raise InvalidInputError(f"expected {self.d} coefficients, got {coeffs.size}")
        return np.tensordot(coeffs, self.stack, axes=1)

    def congruent(self, C):
        """The quadric ``A_j -> C^H A_j C`` seen in coordinates ``z = C z'``."""
        C = linalg.as_complex_matrix(C, "C")
        return QuadricModel([C.conj().T @ A @ C for A in self.matrices])

    def __eq__(self, other):
        if not isinstance(other, QuadricModel) or other.d != self.d or other.n != self.n:
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices))

    def __hash__(self):
        return hash(self.fingerprint())

    def fingerprint(self):
        """Stable short hash of the exact matrix entries."""
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.n},{self.d}".encode())
        for M in self.matrices:
            h.update(np.ascontiguousarray(M, dtype=np.complex128).tobytes())
        return h.hexdigest()[:16]

    def to_dict(self):
        return {
            "n": self.n,
            "d": self.d,
            "matrices": [
                [[[float(z.real), float(z.imag)] for z in row] for row in M]
                for M in self.matrices
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            n, d, raw = int(data["n"]), int(data["d"]), data["matrices"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed quadric document: {exc}") from exc
        if len(raw) != d:
            raise InvalidInputError(f"declared d={d} but found {len(raw)} matrices")
        mats = []
        for j, M in enumerate(raw):
            arr = np.asarray(M, dtype=float)
            if arr.shape != (n, n, 2):
                raise InvalidInputError(
                    f"matrix {j + 1} has shape {arr.shape[:2]}, expected ({n}, {n}) of [re, im]")
            mats.append(linalg.as_hermitian(arr[..., 0] + 1j * arr[..., 1], name=f"A_{j + 1}",
                                            max_deviation=LOAD_HERMITIAN_TOL))
        return cls(mats)

    def dumps(self):
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text())


@dataclass
class LeviClassification:
    """Levi-form verdicts with their numeric certificates."""

    generating: bool
    generating_rank: int
    levi_nondegenerate: bool
    levi_rank: int
    b: np.ndarray | None = None
    strongly_nondegenerate_at_b: bool | None = None
    strongly_pseudoconvex_at_b: bool | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        out = dict(self.__dict__)
        out["b"] = None if self.b is None else [float(x) for x in self.b]
        return out


def validate(Q, b=None, tol=DEFAULT_RANK_TOL):
    """Classify ``Q``: Levi generating, Levi nondegenerate, and the
    ``b``-dependent strong verdicts when ``b`` is given."""
    gen_rank = linalg.real_span_rank([A.reshape(-1) for A in Q.matrices], tol)
    lev_rank = linalg.numerical_rank(np.vstack(Q.matrices), tol)
    out = LeviClassification(
        generating=gen_rank == Q.d,
        generating_rank=gen_rank,
        levi_nondegenerate=lev_rank == Q.n,
        levi_rank=lev_rank,
    )
    if b is not None:
        b = _check_b(Q, b)
        nondeg, smin = strongly_nondegenerate_at(Q, b, tol, return_certificate=True)
        pc, emin = strongly_pseudoconvex_at(Q, b, tol, return_certificate=True)
        out.b = b
        out.strongly_nondegenerate_at_b = nondeg
        out.strongly_pseudoconvex_at_b = pc
        out.diagnostics.update(smallest_singular_value=smin, smallest_eigenvalue=emin)
    return out


def levi_nondegenerate(Q, tol=DEFAULT_RANK_TOL):
    """True iff the common kernel of the ``A_j`` is trivial."""
    return linalg.numerical_rank(np.vstack(Q.matrices), tol) == Q.n


def _check_b(Q, b):
    b = linalg.as_real_vector(b, "b")
    if b.size != Q.d:
        raise InvalidInputError(f"b must have {Q.d} entries, got {b.size}")
    return b


def strongly_nondegenerate_at(Q, b, tol=DEFAULT_RANK_TOL, return_certificate=False):
    S = Q.combination(_check_b(Q, b))
    ok = linalg.numerical_rank(S, tol) == Q.n
    if return_certificate:
        return ok, linalg.smallest_singular_value(S)
    return ok


def strongly_pseudoconvex_at(Q, b, tol=DEFAULT_RANK_TOL, return_certificate=False):
    S = Q.combination(_check_b(Q, b))
    ok = linalg.definiteness(S, tol) is Definiteness.POSITIVE_DEFINITE
    if return_certificate:
        return ok, float(np.linalg.eigvalsh(S)[0])
    return ok


def _min_eig_and_grad(Q, b):
    w, U = np.linalg.eigh(Q.combination(b))
    u = U[:, 0]
    grad = np.real(np.einsum("i,jik,k->j", u.conj(), Q.stack, u))
    return w[0], np.max(np.abs(w)), grad


def find_positive_combination(Q, budget=200, seed=0, tol=DEFAULT_RANK_TOL, steps=50):
    """Heuristic search for ``b`` with ``sum b_j A_j`` positive definite.

    Random unit starts followed by projected gradient ascent of the smallest
    eigenvalue on the unit sphere. Returns ``None`` when nothing is found
    within ``budget`` starts; that is not a proof that no such ``b`` exists.
    """
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        b = rng.standard_normal(Q.d)
        b /= np.linalg.norm(b)
        step = 0.5
        for _ in range(steps):
            lam, top, grad = _min_eig_and_grad(Q, b)
            if lam > tol * top:
                return b
            trial = b + step * grad
            trial /= np.linalg.norm(trial)
            if _min_eig_and_grad(Q, trial)[0] > lam:
                b = trial
            else:
                step /= 2
                if step < 1e-8:
                    break
    return None


def d0_matrix(Q, V):
    """The ``n x d`` matrix whose ``j``-th column is ``A_j V``."""
    V = linalg.as_complex_vector(V, "V")
    if V.size != Q.n:
        raise InvalidInputError(f"V must have {Q.n} entries, got {V.size}")
    return np.stack([A @ V for A in Q.matrices], axis=1)


def segre_rank(Q, V, tol=DEFAULT_RANK_TOL):
    """Complex rank of ``D_0(V)``."""
    V = linalg.as_complex_vector(V, "V")
    if not np.any(V):
        raise InvalidInputError("V must be nonzero")
    return linalg.numerical_rank(d0_matrix(Q, V), tol)


def generic_segre_rank(Q, samples=32, seed=0, tol=DEFAULT_RANK_TOL, return_witness=False):
    """Maximum of ``segre_rank`` over ``samples`` random unit vectors.

    Sampling from one seeded stream makes the value monotone in ``samples``.
    """
    rng = np.random.default_rng(seed)
    best, witness = -1, None
    for _ in range(max(samples, 1)):
        V = linalg.random_unit_vector(rng, Q.n)
        r = segre_rank(Q, V, tol)
        if r > best:
            best, witness = r, V
    return (best, witness) if return_witness else best


def d_nondegenerate(Q, b, V, tol=DEFAULT_RANK_TOL):
    """Invertibility of ``Re(D_0^H (sum b_j A_j)^{-1} D_0)``.

    Returns ``(verdict, certificate)`` with the real ``d x d`` certificate.
    """
    S = Q.combination(_check_b(Q, b))
    if linalg.numerical_rank(S, tol) < Q.n:
        raise PreconditionError("sum_j b_j A_j is singular")
    D0 = d0_matrix(Q, V)
    M = np.real(D0.conj().T @ np.linalg.solve(S, D0))
    M = (M + M.T) / 2
    return linalg.numerical_rank(M, tol) == Q.d, M


def normalize(Q, c):
    """Change coordinates so that ``sum c_j A'_j = I``.

    Returns ``(Q', C)`` with ``A'_j = C^H A_j C`` and ``C = S^{-1/2}``;
    vectors transform as ``z' = C^{-1} z``.
    """
    c = _check_b(Q, c)
    S = Q.combination(c)
    if not strongly_pseudoconvex_at(Q, c):
        raise PreconditionError("sum_j c_j A_j is not positive definite")
    C = linalg.hermitian_inv_sqrt((S + S.conj().T) / 2)
    Qn = Q.congruent(C)
    assert np.linalg.norm(Qn.combination(c) - np.eye(Q.n)) <= 1e-12 * max(1.0, np.linalg.cond(S))
    return Qn, C
